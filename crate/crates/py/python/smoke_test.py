"""Quick end-to-end check of the ramanforge Python bindings."""

import math
import tempfile
from pathlib import Path

import ramanforge_py as rf


def main():
    grid = rf.Grid()
    assert len(grid) == 693 and grid.start == 600.0 and grid.end == 1790.0

    m, n = rf.solve_scale(1.0, 1.0, 1.0, 1.0, 1.0, 0.0)
    assert abs(m - 2.0) < 1e-12 and abs(n - 2.0) < 1e-12

    dark = rf.DarkStats.from_variance(grid, [40.0] * len(grid))
    examples = rf.simulate(6, [dark], seed=42)
    again = rf.simulate(6, [dark], seed=42)
    assert [e["noisy"].values for e in examples] == [e["noisy"].values for e in again]
    ex = examples[0]
    for key in ("noisy", "clean", "pure", "fluor"):
        assert len(ex[key]) == len(grid)

    noisy = [e["noisy"] for e in examples]
    pure = [e["pure"] for e in examples]
    smoothed = rf.denoise("sg:m=5,d=3", noisy)
    assert len(smoothed) == len(noisy)
    oracle = rf.denoise("oracle", noisy, truth=pure)
    assert all(a.values == b.values for a, b in zip(oracle, pure))
    for row in rf.peak_sweep(pure, oracle):
        assert row["missing_ratio"] == 0.0 and row["artifact_ratio"] == 0.0

    baseline, corrected, order = rf.modpoly(ex["clean"])
    assert 3 <= order <= 6 and len(corrected) == len(grid)
    rf.wavelet_denoise(ex["noisy"], levels=3)

    x = [math.sin(0.1 * k) for k in range(100)]
    back = rf.idct(rf.dct(x))
    assert max(abs(a - b) for a, b in zip(x, back)) < 1e-10

    names, basis = rf.skin_basis(grid)
    assert len(names) == 7
    weights = [0.1 * (k + 1) for k in range(7)]
    target = rf.Spectrum(grid, [sum(w * c.values[i] for w, c in zip(weights, basis)) for i in range(len(grid))])
    got = rf.nnls(basis, target)
    assert max(abs(a - b) for a, b in zip(got, weights)) < 1e-8

    assert rf.detect_peaks(ex["pure"], 0.0)

    with tempfile.TemporaryDirectory() as tmp:
        path = str(Path(tmp) / "batch.csv")
        rf.write_batch(path, noisy)
        assert [s.values for s in rf.read_batch(path)] == [s.values for s in noisy]
        try:
            rf.read_batch(str(Path(tmp) / "missing.csv"))
        except OSError:
            pass
        else:
            raise AssertionError("missing file should raise OSError")

    try:
        rf.denoise("fourier", noisy)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown denoiser should raise ValueError")

    print("ramanforge_py smoke test passed")


if __name__ == "__main__":
    main()
