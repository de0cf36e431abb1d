import json
import os
from pathlib import Path

import pytest

import medlang

ROOT = Path(os.environ.get("MEDLANG_SOURCE_DIR", Path(__file__).resolve().parents[2]))
SCM = ROOT / "fixtures" / "scm"


def test_measurement():
    assert medlang.measure_hedging("Well, I think that is right.") == 1
    assert medlang.measure_hedging("That is right.") == 0
    assert medlang.measure_hedging("perhaps so", lexicon=["perhaps"]) == 1
    assert medlang.measure_disfluency("it is for - - for the court") == 1
    assert medlang.measure_disfluency("it is for the court") == 0
    assert len(medlang.default_lexicon()) == 10


def test_oracle_and_estimate():
    oracle = {o["mediator"]: o for o in medlang.exact_effects(str(SCM / "null.json"))}
    assert oracle["hedging"]["nde"] == 0.0
    assert oracle["hedging"]["nie"] == 0.0

    records = medlang.simulate(str(SCM / "binary.json"), 20000, seed=3)
    first = json.loads(records.splitlines()[0])
    assert first["type"] == "schema"
    (est,) = medlang.estimate(records, ["hedging"], bootstrap=100, seed=1)
    truth = medlang.exact_effects(str(SCM / "binary.json"))[0]
    assert abs(est["nde"] - truth["nde"]) < 0.02
    assert abs(est["total_effect"] - est["nde"] - est["nie_reversed"]) < 1e-9
    lo, hi = est["nde_ci"]
    assert lo <= est["nde"] <= hi
    again = medlang.estimate(records, ["hedging"], bootstrap=100, seed=1, threads=2)
    assert again[0] == est


def test_errors_map_to_python():
    with pytest.raises(medlang.ConfigError):
        medlang.exact_effects(str(SCM / "missing.json"))
    with pytest.raises(medlang.DataError):
        medlang.estimate("not json\n", ["hedging"], bootstrap=100)
    assert issubclass(medlang.NumericalError, medlang.MedlangError)


def test_run_and_rerun(tmp_path):
    result = medlang.run(ROOT / "fixtures" / "table1_run.json", tmp_path / "a")
    assert result["included"] == 2
    assert [e["mediator"] for e in result["estimates"]] == ["disfluency", "hedging"]
    checksums = medlang.rerun(tmp_path / "a" / "manifest.json", tmp_path / "b")
    assert checksums == result["checksums"]
    assert medlang.sha256_hex("abc").startswith("ba7816bf")
