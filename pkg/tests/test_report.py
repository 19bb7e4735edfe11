import json
from pathlib import Path
from typing import Any

import numpy as np
import pytest

from expression import Result
from lshmc.diagnostics import ClaimCheck, check_upper
from lshmc.experiments import LowerBoundRow, ScalingRow, chains_csv, emit_report, read_csv_table, write_draws
from lshmc.experiments.report import table_csv, table_json, table_schema
from lshmc.sampler import HmcConfig, run_chain

from .utils import iso, ok


PROVENANCE = {"command": "lower-bound", "seed": 0}


def rows(margins: list[float | None]) -> list[LowerBoundRow]:
    return [
        LowerBoundRow(
            c=float(i + 1),
            eta=0.1 * (i + 1) / 3.0,
            mean_log_accept=-1.0 / 3.0 * i,
            accept_rate=1.0 - 0.1 * i,
            n_draws=1000,
            identity_max_rel_err=1e-17 * i,
            hambound_min_margin=margin,
            chi_sq_event_fraction=0.999,
        )
        for i, margin in enumerate(margins)
    ]


def test_csv_round_trip_is_exact():
    table = rows([None, 0.125, 1.0 / 7.0])

    text = table_csv(table, PROVENANCE)

    assert list(read_csv_table(text, LowerBoundRow)) == table


def test_csv_starts_with_the_configuration():
    first, header = table_csv(rows([None]), PROVENANCE).splitlines()[:2]

    assert first == '# {"command":"lower-bound","seed":0}'
    assert header.startswith("c,eta,mean_log_accept")


def test_all_none_columns_are_left_out():
    table = rows([None, None])

    header = table_csv(table, PROVENANCE).splitlines()[1]
    document = json.loads(table_json(table, PROVENANCE))

    assert "hambound_min_margin" not in header.split(",")
    assert all("hambound_min_margin" not in record for record in document["rows"])
    assert document["config"] == PROVENANCE
    assert [LowerBoundRow.model_validate(record) for record in document["rows"]] == table


def unresolved_cells() -> list[ScalingRow]:
    return [
        ScalingRow(
            kappa=kappa,
            dim=4,
            eta=0.01,
            accept_rate=0.99,
            resolved=False,
            k_budget=3000,
            ks_final=0.4,
            ks_limit=0.17,
        )
        for kappa in (16.0, 64.0)
    ]


def test_table_without_any_mixing_time_reads_back():
    table = unresolved_cells()

    text = table_csv(table, PROVENANCE)
    document = json.loads(table_json(table, PROVENANCE))

    assert "k_hat" in text.splitlines()[1].split(",")
    assert list(read_csv_table(text, ScalingRow)) == table
    assert all(record["k_hat"] is None for record in document["rows"])
    assert [ScalingRow.model_validate(record) for record in document["rows"]] == table


def test_claims_use_the_pass_column():
    claims = [check_upper("demo", "x <= 1", 0.5, 1.0)]

    text = table_csv(claims, PROVENANCE)

    assert text.splitlines()[1] == "claim_id,anchor,statistic,bound,pass"
    assert text.splitlines()[2] == "demo,x <= 1,0.5,1.0,true"
    assert list(read_csv_table(text, ClaimCheck)) == claims


def test_empty_tables_are_rejected():
    with pytest.raises(ValueError):
        table_csv([], PROVENANCE)
    with pytest.raises(ValueError):
        table_json([], PROVENANCE)


def test_emit_report_is_deterministic(tmp_path: Path):
    table = {"lower_bound": rows([0.5, None])}

    first = ok(emit_report(table, tmp_path / "a", "csv", PROVENANCE))
    second = ok(emit_report(table, tmp_path / "b", "csv", PROVENANCE))

    assert [p.name for p in first] == ["lower_bound.csv", "lower_bound.schema.json"]
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize(
    "name, table",
    [("lower_bound", rows([0.5])), ("lower_bound", rows([None, None])), ("scaling", unresolved_cells())],
)
def test_emit_report_rows_satisfy_their_schema(tmp_path: Path, name: str, table: list[Any]):
    paths = ok(emit_report({name: table}, tmp_path, "json", PROVENANCE))

    schema = json.loads(paths[1].read_text())
    document = json.loads(paths[0].read_text())
    items = schema["properties"]["rows"]["items"]

    assert schema == table_schema(type(table[0]))
    for record in document["rows"]:
        assert set(items["required"]) <= set(record)
        assert set(record) <= set(items["properties"])


def test_emit_report_to_an_unwritable_location(tmp_path: Path):
    blocker = tmp_path / "file"
    blocker.write_text("not a directory")

    match emit_report({"lower_bound": rows([None])}, blocker, "csv", PROVENANCE):
        case Result(tag="error", error=error):
            assert isinstance(error, OSError)
        case _:
            assert False


def test_chains_csv_layout():
    result = run_chain(iso(2), HmcConfig(eta=0.3, k=3, record_every=1, seed=4), np.array([0.5, -0.5]))

    lines = chains_csv([result], PROVENANCE).splitlines()

    assert lines[0].startswith("# ")
    assert lines[1] == "chain,iter,accept,delta_H,x_0,x_1"
    assert lines[2] == "0,0,,,0.5,-0.5"
    assert len(lines) == 2 + 4
    chain, it, accept, delta_h, *xs = lines[3].split(",")
    assert (chain, it) == ("0", "1")
    assert accept == str(int(result.accept_flags[0]))
    assert float(delta_h) == result.delta_h[0]
    assert [float(x) for x in xs] == result.samples[1].tolist()


def test_write_draws(tmp_path: Path):
    draws = np.array([[0.1, 0.2], [0.3, 1.0 / 3.0]])

    path = ok(write_draws(draws, tmp_path / "out" / "draws.csv", PROVENANCE))

    lines = path.read_text().splitlines()
    assert lines[1] == "replicate,x_0,x_1"
    assert lines[3] == f"1,0.3,{1.0 / 3.0!r}"
