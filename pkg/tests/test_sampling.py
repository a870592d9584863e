import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hardyphase.errors import InputError
from hardyphase.sampling import (
    CircleGrid,
    ComplexSamples,
    ModulusField,
    RealSamples,
    load_complex_samples,
    load_modulus_field,
    load_real_samples,
    make_circle_grid,
    store_many,
    store_modulus_field,
    store_samples,
)


def test_four_nodes():
    g = make_circle_grid(4, 1.0)
    np.testing.assert_array_equal(g.nodes, [0, np.pi / 2, np.pi, 3 * np.pi / 2])


def test_node_one_at_64():
    assert make_circle_grid(64, 1.0).nodes[1] == pytest.approx(0.0981747704, abs=1e-10)


def test_grid_256_half_radius():
    g = make_circle_grid(256, 0.5)
    assert g.nodes.size == 256 and g.rho == 0.5
    assert g.spacing == pytest.approx(2 * np.pi / 256)
    np.testing.assert_allclose(np.abs(g.points), 0.5)


@pytest.mark.parametrize("n, rho", [(3, 1.0), (0, 0.5), (8, 0.0), (8, 1.5), (8, -0.2)])
def test_grid_rejects(n, rho):
    with pytest.raises(InputError):
        make_circle_grid(n, rho)


@given(st.integers(4, 2048), st.floats(1e-6, 1.0))
def test_grid_deterministic(n, rho):
    a, b = make_circle_grid(n, rho), make_circle_grid(n, rho)
    assert a == b
    np.testing.assert_array_equal(a.nodes, b.nodes)


def test_samples_length_checked():
    with pytest.raises(InputError):
        RealSamples(CircleGrid(8, 1.0), np.ones(7))
    with pytest.raises(InputError):
        ComplexSamples(CircleGrid(8, 1.0), np.ones(9))


def test_samples_read_only():
    s = RealSamples(CircleGrid(8, 1.0), np.ones(8))
    with pytest.raises(ValueError):
        s.values[0] = 2.0


def _csv(rows, header="rho,j,modulus"):
    return io.BytesIO(("\n".join([header] + rows) + "\n").encode())


def test_load_constant_boundary():
    mf = load_modulus_field(_csv([f"1.0,{j},1.0" for j in range(64)]))
    assert mf.radii == [1.0] and mf.n == 64
    np.testing.assert_array_equal(mf.boundary.values, np.ones(64))


def test_load_missing_boundary():
    with pytest.raises(InputError, match="missing boundary circle"):
        load_modulus_field(_csv([f"0.7,{j},1.0" for j in range(8)]))


def test_load_two_circles():
    rows = [f"0.7,{j},0.5" for j in range(64)] + [f"1.0,{j},1.0" for j in range(64)]
    mf = load_modulus_field(_csv(rows))
    assert mf.radii == [0.7, 1.0] and mf.n == 64
    assert mf.interior_radii == [0.7]


@pytest.mark.parametrize(
    "rows, row",
    [
        (["1.0,0,1.0", "1.0,1,abc"], 3),
        (["1.0,0,1.0", "1.0,1,-1.0"], 3),
        (["1.0,0,1.0", "1.0,2,1.0"], 3),
        (["1.0,0,1.0", "1.0,1"], 3),
        (["1.0,0,1", "1.0,1,1", "0.5,0,1"], 4),
        (["0.5,0,1", "1.0,0,1", "0.5,1,1"], 4),
    ],
)
def test_load_errors_carry_row(rows, row):
    with pytest.raises(InputError, match=f"row {row}"):
        load_modulus_field(_csv(rows))


def test_bad_header():
    with pytest.raises(InputError, match="row 1"):
        load_modulus_field(_csv(["1.0,0,1.0"], header="r,k,v"))


def test_store_load_constant_roundtrip():
    s = RealSamples(CircleGrid(16, 1.0), np.full(16, 0.3))
    buf = io.BytesIO()
    store_samples(s, buf)
    back = load_modulus_field(io.BytesIO(buf.getvalue()))
    np.testing.assert_array_equal(back.boundary.values, s.values)


def test_store_complex_format():
    s = ComplexSamples(CircleGrid(4, 0.5), [1 + 2j, -0.5j, 3.0, 0.0])
    buf = io.BytesIO()
    store_samples(s, buf)
    lines = buf.getvalue().decode().split("\n")
    assert lines[0] == "rho,j,re,im"
    assert lines[1] == "0.5,0,1,2"
    assert lines[2].split(",")[:2] == ["0.5", "1"]
    assert b"\r" not in buf.getvalue()


class _Broken(io.RawIOBase):
    def writable(self):
        return True

    def write(self, b):
        raise OSError("disk full")


def test_store_sink_failure_surfaces():
    s = RealSamples(CircleGrid(4, 1.0), np.ones(4))
    with pytest.raises(OSError, match="disk full"):
        store_samples(s, _Broken())


finite = st.floats(-1e300, 1e300, allow_nan=False, allow_infinity=False)


@given(st.integers(4, 40).flatmap(lambda n: st.lists(finite, min_size=2 * n, max_size=2 * n)),
       st.floats(1e-3, 1.0))
def test_complex_roundtrip_bit_exact(vals, rho):
    n = len(vals) // 2
    z = np.array(vals[:n]) + 1j * np.array(vals[n:])
    s = ComplexSamples(CircleGrid(n, rho), z)
    buf = io.BytesIO()
    store_samples(s, buf)
    back = load_complex_samples(io.BytesIO(buf.getvalue()))[rho]
    assert back.grid == s.grid
    assert back.values.tobytes() == s.values.tobytes()


@given(st.integers(4, 32), st.lists(st.floats(1e-3, 0.999), min_size=0, max_size=4, unique=True),
       st.randoms(use_true_random=False))
def test_modulus_field_roundtrip_bit_exact(n, radii, rnd):
    vals = {r: np.array([rnd.uniform(0, 10) * 10 ** rnd.uniform(-200, 200) for _ in range(n)])
            for r in [*radii, 1.0]}
    mf = ModulusField.from_arrays(n, vals)
    buf = io.BytesIO()
    store_modulus_field(mf, buf)
    back = load_modulus_field(io.BytesIO(buf.getvalue()))
    assert back.radii == mf.radii
    for r in mf.radii:
        assert back[r].values.tobytes() == mf[r].values.tobytes()


def test_real_samples_roundtrip_allows_negative():
    s = [RealSamples(CircleGrid(8, r), np.linspace(-1, 1, 8)) for r in (0.25, 0.5)]
    buf = io.BytesIO()
    store_many(s, buf)
    back = load_real_samples(io.BytesIO(buf.getvalue()))
    np.testing.assert_array_equal(back[0.5].values, s[1].values)


def test_field_invariants():
    with pytest.raises(InputError, match="node count"):
        ModulusField({1.0: RealSamples(CircleGrid(8, 1.0), np.ones(8)),
                      0.5: RealSamples(CircleGrid(16, 0.5), np.ones(16))})
    with pytest.raises(InputError):
        ModulusField.from_arrays(8, {1.0: -np.ones(8)})
    mf = ModulusField.from_arrays(8, {1.0: np.ones(8)})
    with pytest.raises(InputError, match="r=0.3 missing"):
        mf[0.3]
