import numpy as np
import pytest

from etklab.errors import ValidationError
from etklab.feature_maps import (
    LocalFeatureSet,
    PreprocessingFn,
    eval_local_E,
    eval_local_T,
    eval_product_feature,
    isometry_P,
    local_trig_components,
    trig_conj,
    trig_eval,
    trig_inner,
    trig_mul,
)

SQ2 = np.sqrt(2.0)


def coord(d=1, index=0):
    return PreprocessingFn(kind="coordinate", input_dim=d, index=index)


class TestPreprocessingFn:
    def test_coordinate(self):
        fn = coord(3, 1)
        assert fn(np.array([1.0, 2.0, 3.0])) == 2.0

    def test_affine(self):
        fn = PreprocessingFn(
            kind="affine", input_dim=2, weights=(2.0, -1.0), bias=0.5
        )
        assert abs(fn(np.array([1.0, 3.0])) - (2.0 - 3.0 + 0.5)) < 1e-15

    def test_zero(self):
        fn = PreprocessingFn(kind="zero", input_dim=4)
        assert fn(np.zeros(4)) == 0.0

    def test_index_out_of_range(self):
        with pytest.raises(ValidationError):
            PreprocessingFn(kind="coordinate", input_dim=2, index=2)

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            PreprocessingFn(kind="fourier", input_dim=1)

    def test_json_roundtrip(self):
        fn = PreprocessingFn(
            kind="affine", input_dim=3, weights=(1.0, 0.0, 2.0), bias=-1.0
        )
        back = PreprocessingFn.from_json_dict(fn.to_json_dict())
        x = np.array([0.3, -0.7, 1.1])
        assert abs(fn(x) - back(x)) < 1e-15


class TestEvalLocalT:
    def test_phi_zero(self):
        t = eval_local_T(coord(), np.array([0.0]))
        assert np.abs(t - np.array([1.0, 1.0, 0.0]) / SQ2).max() < 1e-15

    def test_phi_half_pi(self):
        t = eval_local_T(coord(), np.array([np.pi / 2]))
        assert np.abs(t - np.array([1.0, 0.0, 1.0]) / SQ2).max() < 1e-15

    def test_unit_norm_affine(self, rng):
        fn = PreprocessingFn(
            kind="affine", input_dim=3, weights=(0.3, 1.7, -2.2), bias=0.9
        )
        for _ in range(20):
            x = rng.uniform(-np.pi, np.pi, 3)
            assert abs(np.linalg.norm(eval_local_T(fn, x)) - 1.0) < 1e-14


class TestEvalLocalE:
    def test_phi_zero(self):
        e = eval_local_E(coord(), np.array([0.0]))
        assert np.abs(e - np.ones(4)).max() < 1e-15

    def test_phi_pi(self):
        e = eval_local_E(coord(), np.array([np.pi]))
        assert np.abs(e - np.array([1, -1, -1, 1])).max() < 1e-12

    def test_e_equals_2pt(self, rng):
        p = isometry_P()
        fn = PreprocessingFn(
            kind="affine", input_dim=2, weights=(1.3, -0.4), bias=0.2
        )
        for _ in range(20):
            x = rng.uniform(-np.pi, np.pi, 2)
            e = eval_local_E(fn, x)
            t = eval_local_T(fn, x)
            assert np.abs(e - 2.0 * (p @ t)).max() < 1e-14


class TestIsometryP:
    def test_isometry(self):
        p = isometry_P()
        assert np.abs(p.conj().T @ p - np.eye(3)).max() < 1e-15

    def test_first_column(self):
        p = isometry_P()
        assert np.abs(p[:, 0] - np.array([1, 0, 0, 1]) / SQ2).max() < 1e-15

    def test_pp_dagger_projector(self):
        p = isometry_P()
        w = np.sort(np.linalg.eigvalsh(p @ p.conj().T))
        assert np.abs(w - np.array([0.0, 1.0, 1.0, 1.0])).max() < 1e-13


class TestProductFeature:
    def test_two_zero_maps(self):
        fs = LocalFeatureSet(
            (PreprocessingFn(kind="zero", input_dim=1),) * 2
        )
        vecs = eval_product_feature(fs, np.zeros(1), basis="T")
        assert len(vecs) == 2
        for v in vecs:
            assert np.abs(v - np.array([1.0, 1.0, 0.0]) / SQ2).max() < 1e-15

    def test_single_map_matches_local(self, rng):
        fs = LocalFeatureSet((coord(),))
        x = rng.uniform(-np.pi, np.pi, 1)
        (v,) = eval_product_feature(fs, x, basis="E")
        assert np.abs(v - eval_local_E(fs.maps[0], x)).max() < 1e-15

    def test_full_product_unit_norm(self, rng):
        from functools import reduce

        maps = tuple(coord(4, k % 4) for k in range(5))
        fs = LocalFeatureSet(maps)
        x = rng.uniform(-np.pi, np.pi, 4)
        vecs = eval_product_feature(fs, x, basis="T")
        full = reduce(np.kron, vecs)
        assert abs(np.linalg.norm(full) - 1.0) < 1e-13


class TestTrigComponents:
    def test_local_matches_numeric(self, rng):
        fn = PreprocessingFn(
            kind="affine", input_dim=2, weights=(1.5, -0.7), bias=0.3
        )
        comps = local_trig_components(fn, basis="T")
        for _ in range(10):
            x = rng.uniform(-np.pi, np.pi, 2)
            t = eval_local_T(fn, x)
            vals = np.array([trig_eval(c, x) for c in comps])
            assert np.abs(vals - t).max() < 1e-13

    def test_trig_inner_exact_fourier(self):
        # <cos x, cos x> = 1/2 on [-pi, pi] with uniform measure
        c = {(1.0,): 0.5, (-1.0,): 0.5}
        assert abs(trig_inner(c, c) - 0.5) < 1e-15
        # orthogonal to a different integer frequency
        d = {(2.0,): 0.5, (-2.0,): 0.5}
        assert abs(trig_inner(c, d)) < 1e-15

    def test_trig_inner_matches_quadrature(self, rng):
        # non-integer frequencies exercise the sinc-based overlap
        a = {(1.3,): 0.7 + 0.2j, (-0.4,): 0.1}
        b = {(0.9,): 0.5, (2.2,): -0.3j}
        xs, ws = np.polynomial.legendre.leggauss(200)
        xs = xs * np.pi
        num = 0.0
        for x, w in zip(xs, ws):
            num += w / 2.0 * np.conj(trig_eval(a, np.array([x]))) * trig_eval(
                b, np.array([x])
            )
        assert abs(trig_inner(a, b) - num) < 1e-10

    def test_mul_and_conj(self, rng):
        a = {(1.0,): 0.5, (-1.0,): 0.5}
        b = {(0.0,): 1.0, (2.0,): 0.25j}
        x = rng.uniform(-np.pi, np.pi, 1)
        assert abs(
            trig_eval(trig_mul(a, b), x) - trig_eval(a, x) * trig_eval(b, x)
        ) < 1e-14
        assert abs(
            trig_eval(trig_conj(b), x) - np.conj(trig_eval(b, x))
        ) < 1e-14
