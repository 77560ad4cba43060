"""Independent verification routes for the quantum layer and the training
gradients.

Three suites, each pitting the production path against a slower route built
from different primitives:

* forward oracle: the layer circuit rebuilt as explicit Kronecker-product
  gate matrices multiplied into a dense 2**n x 2**n unitary;
* parameter shift vs central finite differences of the forward map;
* hybrid stack: backpropagated loss gradients vs finite differences of the
  scalar loss over every trainable parameter.

Used by the test suite and by the ``gradcheck`` CLI command.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from . import model as model_mod
from . import qsim

_I2 = np.eye(2, dtype=np.complex128)
_Z2 = np.diag([1.0, -1.0]).astype(np.complex128)


def _rx_matrix(angle: float) -> np.ndarray:
    cos = np.cos(0.5 * angle)
    sin = np.sin(0.5 * angle)
    return np.array([[cos, -1j * sin], [-1j * sin, cos]], dtype=np.complex128)


def _one_qubit_gate(n: int, qubit: int, gate: np.ndarray) -> np.ndarray:
    # qubit 0 is the most significant index bit, so it is the first kron factor
    factors = [gate if k == qubit else _I2 for k in range(n)]
    return reduce(np.kron, factors)


def _cnot_matrix(n: int, control: int, target: int) -> np.ndarray:
    dim = 2**n
    mat = np.zeros((dim, dim), dtype=np.complex128)
    for src in range(dim):
        if (src >> (n - 1 - control)) & 1:
            dst = src ^ (1 << (n - 1 - target))
        else:
            dst = src
        mat[dst, src] = 1.0
    return mat


def circuit_matrix(inputs: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Dense unitary of the embed + entangler circuit."""
    n = len(inputs)
    unitary = np.eye(2**n, dtype=np.complex128)
    for qubit, angle in enumerate(inputs):
        unitary = _one_qubit_gate(n, qubit, _rx_matrix(angle)) @ unitary
    for layer_weights in weights:
        for qubit, angle in enumerate(layer_weights):
            unitary = _one_qubit_gate(n, qubit, _rx_matrix(angle)) @ unitary
        for control, target in qsim._ring(n):
            unitary = _cnot_matrix(n, control, target) @ unitary
    return unitary


def dense_matrix_forward(inputs: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Oracle Z expectations via the full circuit unitary."""
    n = len(inputs)
    start = np.zeros(2**n, dtype=np.complex128)
    start[0] = 1.0
    amps = circuit_matrix(inputs, weights) @ start
    probs = np.abs(amps) ** 2
    expectations = np.empty(n)
    for qubit in range(n):
        z_diag = np.real(np.diag(_one_qubit_gate(n, qubit, _Z2)))
        expectations[qubit] = probs @ z_diag
    return expectations


@dataclass
class SuiteResult:
    name: str
    passed: bool
    max_err: float
    tol: float
    n_cases: int
    worst: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        msg = (
            f"{self.name}: {status}  max err {self.max_err:.3e} "
            f"(tol {self.tol:.0e}, {self.n_cases} cases)"
        )
        if self.worst and not self.passed:
            msg += f"  worst: {self.worst}"
        return msg


def check_forward_oracle(
    seed: int = 0,
    cases_per_shape: int = 20,
    qubit_counts: tuple[int, ...] = (2, 3, 4),
    layer_counts: tuple[int, ...] = (1, 2),
    tol: float = 1e-10,
) -> SuiteResult:
    """quantum_forward against the dense-matrix oracle on random circuits."""
    rng = np.random.default_rng(seed)
    max_err, worst, n_cases = 0.0, "", 0
    for n in qubit_counts:
        for layers in layer_counts:
            spec = qsim.QuantumLayerSpec(n, layers)
            for _ in range(cases_per_shape):
                inputs = rng.uniform(-2 * np.pi, 2 * np.pi, size=n)
                weights = rng.uniform(-2 * np.pi, 2 * np.pi, size=(layers, n))
                got = qsim.quantum_forward(inputs, qsim.QuantumLayerParams(weights), spec)
                want = dense_matrix_forward(inputs, weights)
                err = float(np.max(np.abs(got - want)))
                n_cases += 1
                if err > max_err:
                    max_err, worst = err, f"n={n} layers={layers}"
    return SuiteResult("forward-oracle", max_err <= tol, max_err, tol, n_cases, worst)


def check_parameter_shift(
    seed: int = 0,
    n_cases: int = 50,
    step: float = 1e-5,
    tol: float = 1e-6,
    corrupt: bool = False,
) -> SuiteResult:
    """quantum_gradients against central finite differences of quantum_forward."""
    rng = np.random.default_rng(seed)
    max_err, worst = 0.0, ""
    for case in range(n_cases):
        n = int(rng.integers(1, 5))
        layers = int(rng.integers(1, 3))
        spec = qsim.QuantumLayerSpec(n, layers)
        inputs = rng.uniform(-np.pi, np.pi, size=n)
        weights = rng.uniform(-np.pi, np.pi, size=(layers, n))
        params = qsim.QuantumLayerParams(weights)
        grad = qsim.quantum_gradients(inputs, params, spec)
        d_inputs = grad.d_inputs.copy()
        if corrupt and case == 0:
            d_inputs[0, 0] += 1e-3  # negative-control hook
        for i in range(n):
            plus = qsim.quantum_forward(_bump(inputs, i, step), params, spec)
            minus = qsim.quantum_forward(_bump(inputs, i, -step), params, spec)
            err = float(np.max(np.abs(d_inputs[i] - (plus - minus) / (2 * step))))
            if err > max_err:
                max_err, worst = err, f"case {case} input {i}"
        for layer in range(layers):
            for qubit in range(n):
                w_plus = weights.copy()
                w_plus[layer, qubit] += step
                w_minus = weights.copy()
                w_minus[layer, qubit] -= step
                plus = qsim.quantum_forward(inputs, qsim.QuantumLayerParams(w_plus), spec)
                minus = qsim.quantum_forward(inputs, qsim.QuantumLayerParams(w_minus), spec)
                fd = (plus - minus) / (2 * step)
                err = float(np.max(np.abs(grad.d_weights[layer, qubit] - fd)))
                if err > max_err:
                    max_err, worst = err, f"case {case} weight ({layer},{qubit})"
    return SuiteResult("parameter-shift", max_err <= tol, max_err, tol, n_cases, worst)


def _bump(values: np.ndarray, index: int, delta: float) -> np.ndarray:
    out = values.copy()
    out[index] += delta
    return out


def check_hybrid_gradients(
    seed: int = 0,
    n_draws: int = 20,
    step: float = 1e-4,
    rel_tol: float = 1e-3,
    grad_floor: float = 1e-6,
) -> SuiteResult:
    """Backprop through the full hybrid stack vs finite differences of the loss.

    Relative error is checked per coordinate wherever the analytic gradient
    magnitude exceeds ``grad_floor``.
    """
    rng = np.random.default_rng(seed)
    config = model_mod.HybridModelConfig(kind="hybrid", n_qubits=4)
    max_rel, worst, n_checked = 0.0, "", 0
    for draw in range(n_draws):
        net = model_mod.build_model(config, seed=seed * 1000 + draw)
        features = rng.uniform(0.0, 1.0, size=(1, 6))
        label = np.array([float(rng.integers(0, 2))])
        _, grads = model_mod.loss_and_gradients(net, features, label)
        flat_grad = np.concatenate([g.ravel() for g in grads])
        params = model_mod.get_parameters(net)
        flat = np.concatenate([p.ravel() for p in params])

        def loss_at(vec: np.ndarray) -> float:
            model_mod.set_parameters(net, _unflatten(vec, params))
            loss, _ = model_mod.loss_and_gradients(net, features, label)
            return loss

        for k in range(flat.size):
            if abs(flat_grad[k]) <= grad_floor:
                continue
            n_checked += 1
            fd = (loss_at(_bump(flat, k, step)) - loss_at(_bump(flat, k, -step))) / (
                2 * step
            )
            rel = abs(fd - flat_grad[k]) / max(abs(fd), abs(flat_grad[k]))
            if rel > max_rel:
                max_rel, worst = rel, f"draw {draw} coord {k}"
        model_mod.set_parameters(net, params)
    return SuiteResult(
        "hybrid-backprop", max_rel <= rel_tol, max_rel, rel_tol, n_checked, worst
    )


def _unflatten(flat: np.ndarray, like: list[np.ndarray]) -> list[np.ndarray]:
    out, offset = [], 0
    for arr in like:
        out.append(flat[offset : offset + arr.size].reshape(arr.shape))
        offset += arr.size
    return out


def run_all(seed: int = 0, corrupt: bool = False) -> list[SuiteResult]:
    """All three suites; ``corrupt`` injects a deliberate gradient error."""
    return [
        check_forward_oracle(seed=seed),
        check_parameter_shift(seed=seed, corrupt=corrupt),
        check_hybrid_gradients(seed=seed),
    ]
