import subprocess
import sys

import pytest

from mmlab import fixtures as F
from mmlab.cli import main, SCHEMA
from mmlab.decomposition import dumps


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate_builtin(capsys):
    code, out, _ = run(capsys, "validate", "--fixture", "builtin:F2")
    assert code == 0 and "PASS" in out


def test_validate_shipped_file(capsys):
    code, out, _ = run(capsys, "validate", "--fixture", "F3.algdec")
    assert code == 0 and "PASS" in out


def test_validate_mutated_file(tmp_path, capsys):
    text = dumps(F.fixture_f1()).replace("\nPSI12\n", "\nPSI12\n# edited\n")
    lines = text.splitlines()
    i = lines.index("PSI12") + 2
    toks = lines[i].split()
    toks[0] = str(int(toks[0]) + 1)
    lines[i] = " ".join(toks)
    p = tmp_path / "bad.algdec"
    p.write_text("\n".join(lines) + "\n")
    code, out, _ = run(capsys, "validate", "--fixture", str(p))
    assert code == 1
    assert "FAIL" in out and "psi" in out


def test_validate_parse_error(tmp_path, capsys):
    p = tmp_path / "junk.algdec"
    p.write_text("ALGDEC v1\nDIMS 2 2\n")
    code, out, err = run(capsys, "validate", "--fixture", str(p))
    assert code == 1
    assert "line 2" in out + err


def test_missing_file_is_usage_error(capsys):
    code, _, err = run(capsys, "validate", "--fixture", "does-not-exist.algdec")
    assert code == 2 and "not found" in err


def test_bad_arguments(capsys):
    assert run(capsys, "count")[0] == 2
    assert run(capsys, "count", "--fixture", "builtin:F1", "--M", "64,32")[0] == 2
    assert run(capsys, "nonsense")[0] == 2
    assert run(capsys, "count", "--fixture", "builtin:F1", "--engine", "cc", "--M", "1")[0] == 2


def test_count_matches(capsys):
    code, out, _ = run(capsys, "count", "--fixture", "builtin:F2", "--h", "2", "--x", "1")
    assert code == 0
    assert "MISMATCH" not in out and out.count("MATCH") >= 6


def test_count_algorithm(capsys):
    code, out, _ = run(capsys, "count", "--fixture", "builtin:strassen", "--n", "2,4,8")
    assert code == 0 and "MISMATCH" not in out


def test_csv_schema_and_determinism(capsys):
    args = ("count", "--fixture", "builtin:F1", "--h", "2", "--format", "csv", "--seed", "4")
    first = run(capsys, *args)
    second = run(capsys, *args)
    assert first == second
    lines = first[1].splitlines()
    assert lines[0] == "# " + SCHEMA
    assert lines[1].startswith("engine,")


def test_out_file(tmp_path, capsys):
    p = tmp_path / "r.csv"
    code, _, _ = run(capsys, "predict", "--fixture", "builtin:F1", "--h", "2",
                     "--format", "csv", "--out", str(p))
    assert code == 0
    assert p.read_text().startswith("# " + SCHEMA)


def test_iosim_bounds(capsys):
    code, out, _ = run(capsys, "iosim", "--fixture", "builtin:F1", "--engine", "cc",
                       "--h", "2", "--x", "1", "--M", "24,48")
    assert code == 0 and "M'(h,x)" in out


def test_iosim_recursive_fit(capsys):
    code, out, _ = run(capsys, "iosim", "--fixture", "builtin:strassen", "--engine", "recursive",
                       "--n", "4,8,16", "--M", "16")
    assert code == 0 and "fit" in out


def test_table_labels_reference_rows(capsys):
    code, out, _ = run(capsys, "table")
    assert code == 0
    assert "paper Table 1" in out and "paper Table 2" in out
    assert "MISMATCH" not in out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "mmlab", "validate", "--fixture", "builtin:strassen"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "PASS" in r.stdout
