import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import linalg

seeds = st.integers(min_value=0, max_value=2 ** 31 - 1)


def test_eig_hermitian_diagonal_and_pauli(paulis):
    sx, _, _ = paulis
    assert np.allclose(linalg.eig_hermitian(np.diag([2.0, -1.0])).eigenvalues, [2, -1])
    assert np.allclose(linalg.eig_hermitian(sx).eigenvalues, [1, -1])


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_eig_hermitian_reconstruction(seed):
    h = linalg.random_hermitian(8, linalg.RandomStream(seed))
    spectrum = linalg.eig_hermitian(h)
    scale = np.abs(h).max()
    assert np.abs(spectrum.reconstruct() - h).max() <= 1e-9 * scale
    v = spectrum.eigenvectors
    assert np.abs(v.conj().T @ v - np.eye(8)).max() <= 1e-10
    assert np.all(np.diff(spectrum.eigenvalues) <= 0)


def test_hermitize_rejects_non_square():
    with pytest.raises(ValueError):
        linalg.hermitize(np.ones((2, 3)))
    with pytest.raises(ValueError):
        linalg.hermitize(np.array([[np.nan, 0], [0, 1]]))


def test_lambda_max_examples(paulis):
    sx, _, sz = paulis
    assert linalg.lambda_max(np.eye(4)) == pytest.approx(1.0)
    assert linalg.lambda_max(sx + sz) == pytest.approx(np.sqrt(2))
    assert linalg.lambda_max(-np.eye(3)) == pytest.approx(-1.0)


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_lambda_max_unitary_invariance(seed):
    rng = linalg.RandomStream(seed)
    h = linalg.random_hermitian(5, rng)
    u = linalg.haar_unitary(5, rng)
    assert linalg.lambda_max(u.conj().T @ h @ u) == pytest.approx(linalg.lambda_max(h), abs=1e-9)


def test_kron_examples(paulis):
    _, _, sz = paulis
    assert np.allclose(linalg.kron(np.eye(2), np.eye(3)), np.eye(6))
    assert np.allclose(linalg.kron(sz, sz), np.diag([1, -1, -1, 1]))


def test_kron_mixed_product(rng):
    a, b, c, d = (linalg.random_hermitian(2, s) for s in rng.split(4))
    assert np.allclose(linalg.kron(a @ b, c @ d), linalg.kron(a, c) @ linalg.kron(b, d))


def test_kron_guard():
    with pytest.raises(ValueError):
        linalg.kron(np.eye(100), np.eye(100))


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_partial_traces(seed):
    rng = linalg.RandomStream(seed)
    a = linalg.random_hermitian(3, rng)
    b = linalg.random_hermitian(4, rng)
    assert np.allclose(linalg.partial_trace_first(linalg.kron(a, b), 3, 4), np.trace(a) * b, atol=1e-12 * max(1.0, np.abs(a).max() * np.abs(b).max()) * 10)
    assert np.allclose(linalg.partial_trace_second(linalg.kron(a, b), 3, 4), np.trace(b) * a)
    m = linalg.random_hermitian(12, rng)
    assert np.trace(linalg.partial_trace_first(m, 3, 4)) == pytest.approx(np.trace(m))


def test_partial_trace_identity_and_mismatch():
    g, d = 3, 2
    assert np.allclose(linalg.partial_trace_first(np.eye(2 * g * d), 2 * g, d), 2 * g * np.eye(d))
    with pytest.raises(ValueError):
        linalg.partial_trace_first(np.eye(5), 2, 2)


def test_polar_sign_examples():
    assert np.allclose(linalg.polar_sign(np.diag([2.0, -3.0])), np.diag([1, -1]))
    assert np.allclose(linalg.polar_sign(np.array([[2.0, 1.0], [1.0, 2.0]])), np.eye(2))
    assert np.allclose(linalg.polar_sign(np.zeros((2, 2))), np.eye(2))


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_polar_sign_trace_norm_identity(seed):
    b = linalg.random_hermitian(4, linalg.RandomStream(seed))
    pol = linalg.polar_sign(b)
    assert np.trace(b @ pol.conj().T).real == pytest.approx(linalg.trace_norm(b), abs=1e-9)
    absolute = linalg.sqrtm_psd(b @ b)
    assert np.allclose(pol @ absolute, b, atol=1e-9)


def test_norm_examples(paulis):
    sx, _, _ = paulis
    assert linalg.trace_norm(np.diag([1.0, -1.0])) == pytest.approx(2)
    assert linalg.op_norm(np.diag([1.0, -1.0])) == pytest.approx(1)
    assert linalg.op_norm(sx / np.sqrt(2)) == pytest.approx(1 / np.sqrt(2))


@given(seeds, st.integers(min_value=1, max_value=6))
@settings(max_examples=30, deadline=None)
def test_norm_inequalities(seed, d):
    b = linalg.random_hermitian(d, linalg.RandomStream(seed))
    op, tr = linalg.op_norm(b), linalg.trace_norm(b)
    assert op <= tr + 1e-12
    assert tr <= d * op + 1e-12


def test_real_embedding(paulis):
    _, sy, _ = paulis
    real = np.array([[1.0, 2.0], [2.0, -1.0]])
    assert np.allclose(linalg.real_embedding(real), np.block([[real, np.zeros((2, 2))], [np.zeros((2, 2)), real]]))
    assert np.allclose(np.linalg.eigvalsh(linalg.real_embedding(sy)), [-1, -1, 1, 1])


@given(seeds)
@settings(max_examples=30, deadline=None)
def test_real_embedding_doubles_spectrum(seed):
    h = linalg.random_hermitian(4, linalg.RandomStream(seed))
    emb = linalg.real_embedding(h)
    assert np.allclose(emb, emb.T)
    doubled = np.sort(np.repeat(np.linalg.eigvalsh(h), 2))
    assert np.allclose(np.linalg.eigvalsh(emb), doubled, atol=1e-9)
    assert np.allclose(linalg.complex_from_embedding(emb), h)


def test_embedding_inner_product_matches_complex(rng):
    w, x = (linalg.random_hermitian(3, s) for s in rng.split(2))
    lhs = np.trace(0.5 * linalg.real_embedding(w) @ linalg.real_embedding(x))
    assert lhs == pytest.approx(np.trace(w @ x).real)


def test_hermitian_basis_is_orthonormal():
    basis = linalg.hermitian_basis(3)
    assert len(basis) == 9
    gram = np.array([[np.trace(a @ b).real for b in basis] for a in basis])
    assert np.allclose(gram, np.eye(9))


def test_haar_unitary_is_unitary(rng):
    u = linalg.haar_unitary(4, rng)
    assert np.abs(u.conj().T @ u - np.eye(4)).max() <= 1e-10
    batch = linalg.haar_unitary(3, rng, size=5)
    assert batch.shape == (5, 3, 3)


def test_haar_moments(rng):
    phases = linalg.haar_unitary(1, rng, size=100_000)[:, 0, 0]
    assert abs(phases.mean()) <= 0.02
    d = 3
    entries = np.abs(linalg.haar_unitary(d, rng, size=20_000)[:, 0, 0]) ** 2
    assert abs(entries.mean() - 1 / d) <= 3 * entries.std(ddof=1) / np.sqrt(entries.size)


def test_complex_gaussian_moments(rng):
    z = linalg.complex_gaussian_vector(1, rng, size=1_000_000)[:, 0]
    n = z.size
    power = np.abs(z) ** 2
    assert abs(power.mean() - 1) <= 3 * power.std(ddof=1) / np.sqrt(n)
    assert abs(z.mean()) <= 3 * np.sqrt(1 / n) * np.sqrt(2)
    sq = z ** 2
    assert abs(sq.mean()) <= 3 * np.abs(sq).std(ddof=1) / np.sqrt(n) * np.sqrt(2)


def test_random_stream_determinism():
    a = linalg.RandomStream(7, stream_id=3).generator.standard_normal(10)
    b = linalg.RandomStream(7, stream_id=3).generator.standard_normal(10)
    c = linalg.RandomStream(7, stream_id=4).generator.standard_normal(10)
    assert a.tobytes() == b.tobytes()
    assert not np.allclose(a, c)
    children = linalg.RandomStream(7).split(2)
    assert not np.allclose(children[0].generator.standard_normal(5), children[1].generator.standard_normal(5))
    restored = linalg.RandomStream.from_dict(linalg.RandomStream(7, 1, (2,)).to_dict())
    assert restored.generator.standard_normal(3).tobytes() == linalg.RandomStream(7, 1, (2,)).generator.standard_normal(3).tobytes()


def test_matrix_json_codec(rng):
    m = linalg.random_hermitian(3, rng)
    assert np.array_equal(linalg.matrix_from_dict(linalg.matrix_to_dict(m)), m)
    with pytest.raises(ValueError):
        linalg.matrix_from_dict({"dim": 2, "re": [[1.0]], "im": [[0.0]]})


def test_vector_json_codec(rng):
    v = linalg.random_unit_vector(4, rng)
    data = linalg.vector_to_dict(v)
    assert len(data["re"]) == len(data["im"]) == 4
    assert np.array_equal(linalg.vector_from_dict(data), v)
    # a missing imaginary part reads as a real vector
    assert np.array_equal(linalg.vector_from_dict({"re": [1.0, -2.0]}), np.array([1.0, -2.0], dtype=complex))


def test_density_matrix_and_support(rng):
    rho = linalg.random_density_matrix(4, rng, rank=2)
    assert np.trace(rho).real == pytest.approx(1)
    assert linalg.is_psd(rho)
    iso, restricted = linalg.support_restriction(rho)
    assert iso.shape == (4, 2)
    assert np.allclose(iso @ restricted @ iso.conj().T, rho, atol=1e-10)
    with pytest.raises(ValueError):
        linalg.inv_sqrtm_psd(rho)
