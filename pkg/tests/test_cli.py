import json

import pytest

from qdisc.cli import load_config, main, parse_element
from qdisc.discrep import ANTI_NORMAL
from qdisc.errors import ConfigInvalid


def test_verify_hypergeometric_suite(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["verify", "--q", "3/5", "--suite", "lemma33", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["summary"] == {"passed": 2, "failed": 0, "skipped": 0}
    assert [c["id"] for c in report["checks"]] == sorted(c["id"] for c in report["checks"])


def test_verify_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        main(["verify", "--suite", "c-series", "--suite", "berezin-f0", "--out", str(p)])
    assert a.read_bytes() == b.read_bytes()


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"q": "7/10", "nt": 2, "suites": ["lemma33"]}))
    c = load_config(str(cfg), {"nt": 3})
    assert c.q == "7/10" and c.nt == 3 and c.suites == ("lemma33",)


@pytest.mark.parametrize("bad", [{"q": "2"}, {"t": "0"}, {"suites": ["nope"]}, {"convention": "x"}])
def test_invalid_config(bad):
    with pytest.raises(ConfigInvalid):
        load_config(None, bad)


def test_invalid_config_exit_code(capsys):
    assert main(["verify", "--q", "5/4"]) == 2


def test_compute_star(capsys):
    assert main(["compute", "star", "--f1", '[[0,1,"1"]]', "--f2", '[[1,0,"1"]]', "--q", "1/2", "--nt", "2"]) == 0
    payload = json.loads(capsys.readouterr().out)["payload"]
    terms = {(j, k): c for j, k, c in payload["terms"]}
    assert terms[(0, 0)][0] == "3/4" and terms[(1, 1)][0] == "1/4"


def test_compute_berezin_f0(capsys):
    main(["compute", "berezin", "--f", '{"order": "mixed", "terms": [[0,0,0,"1"]]}', "--t", "formal", "--nt", "2", "--q", "1/2"])
    payload = json.loads(capsys.readouterr().out)["payload"]
    assert payload["terms"] == [
        [0, 0, 0, ["1/1", "-1/1", "0/1"]],
        [0, 1, 0, ["0/1", "1/4", "-1/4"]],
        [0, 2, 0, ["0/1", "0/1", "1/16"]],
    ]


def test_compute_table_p_poly(capsys):
    main(["compute", "table", "p-poly", "--q", "1/2", "--hi", "1"])
    payload = json.loads(capsys.readouterr().out)["payload"]
    assert payload == {"0": ["1/1"], "1": ["1/1", "3/4"]}


def test_parse_element():
    e = parse_element('{"order": "anti_normal", "terms": [[1, 2, "3/4"]]}')
    assert e.order == ANTI_NORMAL and e.coeffs == {(1, 2): 3 / 4}
    with pytest.raises(ConfigInvalid):
        parse_element("not json")
