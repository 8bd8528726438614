"""Dense-matrix reference evaluator, used only by the test suite.

Builds the full 2^d x 2^d unitary with Kronecker products and shares no code
with the batched simulator in :mod:`hybrid_pg.quantum`.
"""

import numpy as np

I2 = np.eye(2, dtype=complex)
PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def rotation_matrix(axis, theta):
    # exp(-i theta P / 2) = cos(theta/2) I - i sin(theta/2) P
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * PAULI[axis]


def embed_single(op, qubit, n_qubits):
    out = np.array([[1.0 + 0j]])
    for q in range(n_qubits):
        out = np.kron(out, op if q == qubit else I2)
    return out


def cnot_matrix(control, target, n_qubits):
    p0 = np.array([[1, 0], [0, 0]], dtype=complex)
    p1 = np.array([[0, 0], [0, 1]], dtype=complex)
    left = embed_single(p0, control, n_qubits)
    right = embed_single(p1, control, n_qubits) @ embed_single(PAULI["X"], target, n_qubits)
    return left + right


def circuit_unitary(scaled_obs, angles, embed_axis="X"):
    angles = np.asarray(angles)
    depth, n_qubits, _ = angles.shape
    u = np.eye(2**n_qubits, dtype=complex)
    for q in range(n_qubits):
        u = embed_single(rotation_matrix(embed_axis, scaled_obs[q]), q, n_qubits) @ u
    for layer in range(depth):
        for q in range(n_qubits):
            for k, axis in enumerate("XYZ"):
                u = embed_single(rotation_matrix(axis, angles[layer, q, k]), q, n_qubits) @ u
        for q in range(n_qubits - 1):
            u = cnot_matrix(q, q + 1, n_qubits) @ u
    return u


def dense_expectation(scaled_obs, angles, embed_axis="X"):
    """<0| U^dag (Z x I x ...) U |0> by explicit matrix algebra."""
    angles = np.asarray(angles)
    n_qubits = angles.shape[1]
    u = circuit_unitary(scaled_obs, angles, embed_axis)
    ket = np.zeros(2**n_qubits, dtype=complex)
    ket[0] = 1.0
    observable = embed_single(PAULI["Z"], 0, n_qubits)
    psi = u @ ket
    return float(np.real(np.conj(psi) @ observable @ psi))


def central_difference(f, x, h=1e-4):
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for k in range(x.size):
        step = np.zeros_like(x)
        step.flat[k] = h
        grad.flat[k] = (f(x + step) - f(x - step)) / (2 * h)
    return grad
