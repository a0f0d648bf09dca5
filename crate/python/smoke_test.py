"""Smoke test for the wavebem_py extension module.

Build first:
    cargo build --release -p wavebem-python --features extension-module
then run:
    python3 python/smoke_test.py
"""

import cmath
import importlib.machinery
import importlib.util
import json
import math
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_module():
    try:
        import wavebem_py  # installed with maturin

        return wavebem_py
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libwavebem_py.so"
        if lib.exists():
            loader = importlib.machinery.ExtensionFileLoader("wavebem_py", str(lib))
            spec = importlib.util.spec_from_file_location("wavebem_py", lib, loader=loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            return module
    sys.exit("wavebem_py not built; see the module docstring")


def main():
    wb = load_module()

    mesh = wb.Mesh.builtin("split_ball:2")
    stats = mesh.stats()
    assert stats["triangles"] == mesh.num_triangles == 192, stats
    assert stats["jump_triangles"] == 64
    assert mesh.to_msh().startswith("$MeshFormat")

    s = 1 + 2j
    k = wb.kernel(s, 1.0)
    assert abs(k - cmath.exp(-s) / (4 * math.pi)) < 1e-15

    w = wb.weights(lambda z: z, 0.1, 16, "bdf1", 0.9)
    assert abs(w[0] - 10) < 1e-10 and abs(w[1] + 10) < 1e-10 and max(abs(x) for x in w[2:]) < 1e-10

    problem = wb.Transmission(mesh, a1=1.2, p1=0.9, a2=1.2, p2=0.9)
    out = problem.solve_point_source(1 + 1j, points=[(0.0, 0.0, 0.3)])
    assert out["residual"] < 1e-10
    assert out["dirichlet_error"] < 0.05 and out["neumann_error"] < 0.2, out

    run = wb.Transmission(mesh).march(0.2, 16, 1.5, 0.0, points=[(0.0, 0.0, 0.3)])
    assert len(run["times"]) == 17 and run["coercivity"] >= -1e-10

    report = json.loads(wb.verify("pairing"))
    assert report["schema"] == "wavebem.probe/1" and report["passed"]
    assert len(json.loads(wb.manifest())) == 11
    assert wb.parse_frequency("2-1i") == 2 - 1j

    print("wavebem_py smoke test passed")


if __name__ == "__main__":
    main()
