import json

import numpy as np
import pytest

import sushi
from sushi.cli import main
from sushi.meshfile import write_mesh


def parse_legacy_vtk(path):
    """Minimal reader for the legacy ASCII unstructured-grid format."""
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# vtk DataFile Version 3.0")
    assert lines[2] == "ASCII"
    assert lines[3] == "DATASET UNSTRUCTURED_GRID"
    it = iter(range(4, len(lines)))
    points, cells, cell_data = [], [], {}
    i = 4
    while i < len(lines):
        tok = lines[i].split()
        if not tok:
            i += 1
            continue
        if tok[0] == "POINTS":
            n = int(tok[1])
            for j in range(n):
                points.append([float(x) for x in lines[i + 1 + j].split()])
            i += n + 1
        elif tok[0] == "CELLS":
            n = int(tok[1])
            for j in range(n):
                entry = [int(x) for x in lines[i + 1 + j].split()]
                assert entry[0] == len(entry) - 1
                cells.append(entry[1:])
            i += n + 1
        elif tok[0] == "CELL_TYPES":
            n = int(tok[1])
            assert all(lines[i + 1 + j].strip() == "7" for j in range(n))
            i += n + 1
        elif tok[0] == "CELL_DATA":
            i += 1
        elif tok[0] == "SCALARS":
            name = tok[1]
            assert lines[i + 1].startswith("LOOKUP_TABLE")
            vals = [float(lines[i + 2 + j]) for j in range(len(cells))]
            cell_data[name] = vals
            i += len(cells) + 2
        elif tok[0] == "VECTORS":
            vals = [[float(x) for x in lines[i + 1 + j].split()]
                    for j in range(len(cells))]
            cell_data[tok[1]] = vals
            i += len(cells) + 1
        else:
            raise AssertionError(f"unexpected VTK line: {lines[i]}")
    return points, cells, cell_data


def test_solve_writes_artifacts(tmp_path, capsys):
    code = main([
        "solve", "--problem", "anisotropic-smooth", "--mesh", "rect:8x6",
        "--policy", "all-barycentric", "--out", str(tmp_path),
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "N=48" in out
    assert "NM=488" in out
    points, cells, cell_data = parse_legacy_vtk(tmp_path / "solution.vtk")
    assert len(cells) == 48
    assert len(cell_data["u"]) == 48
    assert "gradient" in cell_data
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["N"] == 48
    assert manifest["NM"] == 488
    assert (tmp_path / "report.csv").exists()


def test_solve_hybrid_counts(tmp_path, capsys):
    code = main([
        "solve", "--mesh", "rect:8x6", "--policy", "all-hybrid",
        "--out", str(tmp_path),
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "N=130" in out and "NM=874" in out


def test_solve_barrier_prints_fluxes(tmp_path, capsys):
    code = main([
        "solve", "--problem", "tilted-barrier", "--mesh", "barrier:1",
        "--policy", "discontinuity", "--out", str(tmp_path), "--method", "dense",
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "-0.2 0.2 1 -1" in out
    _, _, cell_data = parse_legacy_vtk(tmp_path / "solution.vtk")
    assert "region" in cell_data


def test_solve_missing_mesh_file_exits_2(tmp_path, capsys):
    code = main(["solve", "--mesh", "file:does-not-exist.msh",
                 "--out", str(tmp_path)])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_unknown_problem_exits_2(tmp_path, capsys):
    code = main(["solve", "--problem", "nope", "--mesh", "rect:2x2",
                 "--out", str(tmp_path)])
    assert code == 2


def test_outputs_are_byte_deterministic(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert main([
            "solve", "--problem", "anisotropic-smooth", "--mesh", "ncrect:1",
            "--policy", "all-barycentric", "--out", str(out),
        ]) == 0
    for name in ("solution.vtk", "report.csv", "manifest.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_convergence_synthetic_replay(tmp_path, capsys):
    code = main([
        "convergence", "--check", "0.5:0.25,0.25:0.0625,0.125:0.015625",
        "--out", str(tmp_path),
    ])
    assert code == 0
    assert "slope(synthetic)=2" in capsys.readouterr().out


def test_convergence_small_study(tmp_path, capsys):
    code = main([
        "convergence", "--family", "rect", "--levels", "2,4,8",
        "--policy", "all-barycentric", "--out", str(tmp_path),
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "slope(eps_u)=" in out
    assert (tmp_path / "study.csv").exists()


def test_mesh_check_pass(tmp_path, capsys):
    code = main(["mesh-check", "--mesh", "rect:4x4", "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "PASS" in out
    assert "theta_D=2.82843" in out


def test_mesh_check_barrier_thin_layer_warning(tmp_path, capsys):
    code = main(["mesh-check", "--mesh", "barrier:3", "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "PASS" in out
    assert "warning: large theta_D" in out


def test_mesh_check_reads_files_and_fails_on_corruption(tmp_path, capsys):
    good = tmp_path / "good.txt"
    write_mesh(sushi.gen_rect(2, 2), good)
    assert main(["mesh-check", "--mesh", f"file:{good}"]) == 0
    capsys.readouterr()

    # corruption: a duplicated cell gives an interior face three owners;
    # derived geometry is always self-consistent, so corruption surfaces
    # as a construction failure (input error), not a residual
    bad = tmp_path / "bad.txt"
    text = good.read_text().splitlines()
    idx = text.index("cells 4")
    text.insert(idx + 1, text[idx + 1])
    text[idx] = "cells 5"
    bad.write_text("\n".join(text) + "\n")
    code = main(["mesh-check", "--mesh", f"file:{bad}"])
    assert code == 2
    assert "more than two cells" in capsys.readouterr().err


def test_cli_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
