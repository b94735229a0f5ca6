"""Tests for the counter-based random streams and the inverse-CDF sampler."""

import numpy as np
import pytest
import scipy.stats

from fixnet.rng import Stream, mix64, normal_icdf

GOLDEN = 0x9E3779B97F4A7C15

# First four outputs of the splitmix64 generator seeded with 0, a published
# reference vector for the algorithm.
SPLITMIX64_SEED0 = (
    16294208416658607535,
    7960286522194355700,
    487617019471545679,
    17909611376780542444,
)


def _reference_splitmix64(seed, count):
    """Independent textbook implementation: advance by the golden-ratio
    increment, then scramble with the mix function's published constants."""
    out = []
    state = seed
    for _ in range(count):
        state = (state + GOLDEN) & 0xFFFFFFFFFFFFFFFF
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
        out.append(z ^ (z >> 31))
    return out


def test_reference_vector_matches_published_values():
    assert tuple(_reference_splitmix64(0, 4)) == SPLITMIX64_SEED0


def test_mix64_reproduces_reference_generator():
    for i, expected in enumerate(SPLITMIX64_SEED0):
        assert mix64((i + 1) * GOLDEN & 0xFFFFFFFFFFFFFFFF) == expected


def test_mix64_array_path_matches_scalar_path():
    zs = np.arange(1, 100, dtype=np.uint64) * np.uint64(0x9E3779B97F4A7C15)
    arr = mix64(zs)
    assert arr.dtype == np.uint64
    assert all(int(a) == mix64(int(z)) for a, z in zip(arr, zs))


def test_stream_uniforms_derive_from_reference_outputs():
    expected = np.array([(v >> 11) / float(1 << 53) for v in SPLITMIX64_SEED0])
    got = Stream(0).uniforms(4)
    assert np.array_equal(got, expected)


def test_stream_is_deterministic_and_counter_based():
    a = Stream(123).uniforms(6)
    b = Stream(123)
    # Drawing in two calls must match one big call: draws depend only on
    # (seed, index), never on call boundaries.
    parts = np.concatenate([b.uniforms(2), b.uniforms(4)])
    assert np.array_equal(a, parts)


def test_uniform_range_and_matrix_shape():
    s = Stream(7)
    u = s.uniforms(10_000, low=-2.0, high=3.0)
    assert np.all(u >= -2.0) and np.all(u < 3.0)
    m = Stream(7).uniform_matrix(20, 3, low=-1.0, high=1.0)
    assert m.shape == (20, 3)
    assert np.array_equal(m.ravel(), Stream(7).uniforms(60, low=-1.0, high=1.0))


def test_normals_have_standard_moments():
    z = Stream(11).normals(40_000)
    assert abs(float(np.mean(z))) < 0.02
    assert abs(float(np.var(z)) - 1.0) < 0.03
    assert np.all(np.isfinite(z))


def test_normal_icdf_matches_scipy_within_stated_accuracy():
    # The rational approximation is documented as having relative error
    # below 1.2e-9 over the whole open interval.
    p = np.concatenate([
        np.array([1e-12, 1e-9, 1e-6, 1e-4, 0.02424, 0.02426]),
        np.linspace(0.001, 0.999, 4001),
        1.0 - np.array([1e-12, 1e-9, 1e-6, 1e-4]),
    ])
    ours = normal_icdf(p)
    exact = scipy.stats.norm.ppf(p)
    err = np.abs(ours - exact) / np.maximum(np.abs(exact), 1.0)
    assert float(np.max(err)) <= 1.2e-9


def test_integers_stay_in_range():
    v = Stream(3).integers(5000, 17)
    assert v.dtype == np.int64
    assert np.all((0 <= v) & (v < 17))
    # All residues show up over a few thousand draws.
    assert set(np.unique(v)) == set(range(17))


def test_permutation_is_a_permutation():
    perm = Stream(9).permutation(200)
    assert sorted(perm.tolist()) == list(range(200))
    assert not np.array_equal(perm, np.arange(200))


def test_children_are_stable_and_distinct():
    root = Stream(42)
    assert Stream(42).child(5).seed == root.child(5).seed
    assert root.child(0).seed != root.child(1).seed
    assert root.child(3).seed != root.seed
    assert Stream(42).child_label("alpha").seed == root.child_label("alpha").seed
    assert root.child_label("alpha").seed != root.child_label("beta").seed
    # Child draws differ from the parent's.
    assert not np.array_equal(root.child(0).uniforms(4), Stream(42).uniforms(4))


def test_children_do_not_depend_on_parent_position():
    a = Stream(42)
    a.uniforms(10)
    b = Stream(42)
    assert a.child(2).seed == b.child(2).seed
    assert a.child_label("x").seed == b.child_label("x").seed


def test_seed_wraps_to_64_bits():
    assert Stream(2**64 + 5).seed == 5
    assert Stream(-1).seed == 2**64 - 1
