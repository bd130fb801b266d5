"""
The trial manifold: a tanh MLP w^NN times a boundary multiplier, plus a lift.

u^NN(x) = Phi(x) w^NN(x) + g_lift(x)

Values and spatial gradients are propagated together through the layers
(forward mode in x). The loss gradient with respect to the weights is a
reverse sweep over that forward pass, so it also differentiates the
gradient path exactly.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..fem.mesh import Mesh
from ..fem.quadrature import QuadRule
from ..fem.testspace import ResidualAssembler
from ..problems.fields import AnalyticField, Field
from ..problems.manufactured import ProblemSpec
from ..utils.numerics import ensure_finite

logger = logging.getLogger(__name__)


class NetworkError(Exception):
    """Exception raised for inconsistent network definitions."""
    pass


@dataclass(eq=False)
class MLPParams:
    """
    Weights of a fully-connected network.

    Attributes:
        widths: Layer widths, 2 inputs first, 1 output last
        weights: W_l with shape (n_l, n_{l-1})
        biases: b_l with shape (n_l,)
    """

    widths: Tuple[int, ...]
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def __post_init__(self):
        self.widths = tuple(int(w) for w in self.widths)
        _check_widths(self.widths)
        if len(self.weights) != len(self.widths) - 1 or len(self.biases) != len(self.widths) - 1:
            raise NetworkError("one weight matrix and one bias vector per layer expected")
        for layer, (W, b) in enumerate(zip(self.weights, self.biases)):
            shape = (self.widths[layer + 1], self.widths[layer])
            if W.shape != shape or b.shape != (shape[0],):
                raise NetworkError(
                    f"layer {layer}: expected W{shape} and b({shape[0]},), got W{W.shape} b{b.shape}"
                )

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def n_params(self) -> int:
        return sum((n_in + 1) * n_out for n_in, n_out in zip(self.widths, self.widths[1:]))

    def flatten(self) -> np.ndarray:
        """All parameters as one vector: per layer W (row-major) then b."""
        parts = []
        for W, b in zip(self.weights, self.biases):
            parts.append(W.ravel())
            parts.append(b)
        return np.concatenate(parts)

    def with_flat(self, vector: np.ndarray) -> "MLPParams":
        """New parameters of the same architecture taken from a flat vector."""
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (self.n_params,):
            raise NetworkError(f"expected {self.n_params} parameters, got shape {vector.shape}")
        weights, biases = [], []
        offset = 0
        for n_in, n_out in zip(self.widths, self.widths[1:]):
            weights.append(vector[offset:offset + n_in * n_out].reshape(n_out, n_in).copy())
            offset += n_in * n_out
            biases.append(vector[offset:offset + n_out].copy())
            offset += n_out
        return MLPParams(self.widths, weights, biases)

    def copy(self) -> "MLPParams":
        return MLPParams(self.widths, [W.copy() for W in self.weights], [b.copy() for b in self.biases])


def _check_widths(widths: Sequence[int]) -> None:
    if len(widths) == 0:
        raise NetworkError("widths must not be empty")
    if len(widths) < 2:
        raise NetworkError(f"need at least an input and an output layer, got {list(widths)}")
    if widths[0] != 2 or widths[-1] != 1:
        raise NetworkError(f"widths must start with 2 and end with 1, got {list(widths)}")
    if any(w < 1 for w in widths):
        raise NetworkError(f"layer widths must be positive, got {list(widths)}")


def init_params(widths: Sequence[int], seed: int) -> MLPParams:
    """
    Random parameters: W ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), b = 0.

    Raises:
        NetworkError: If the widths are empty or malformed
    """
    widths = tuple(int(w) for w in widths)
    _check_widths(widths)
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for n_in, n_out in zip(widths, widths[1:]):
        bound = 1.0 / np.sqrt(n_in)
        weights.append(rng.uniform(-bound, bound, size=(n_out, n_in)))
        biases.append(np.zeros(n_out))
    params = MLPParams(widths, weights, biases)
    logger.debug(f"Initialized network {list(widths)} with {params.n_params} parameters (seed={seed})")
    return params


# ============================================================================
# Forward pass with input gradients
# ============================================================================

@dataclass
class _Layer:
    a_prev: np.ndarray          # (P, n_in) input activations
    d_prev: np.ndarray          # (2, P, n_in) their x- and y-derivatives
    t: Optional[np.ndarray] = None    # (P, n_out) tanh(z)
    s: Optional[np.ndarray] = None    # 1 - t^2
    dz: Optional[np.ndarray] = None   # (2, P, n_out) derivatives of z


@dataclass
class _Tape:
    layers: List[_Layer] = field(default_factory=list)
    value: Optional[np.ndarray] = None      # (P,)
    gradient: Optional[np.ndarray] = None   # (P, 2)


def network_forward(params: MLPParams, points: np.ndarray) -> _Tape:
    """w^NN and grad w^NN at (P, 2) points, keeping what the reverse sweep needs."""
    points = np.asarray(points, dtype=float)
    n_points = points.shape[0]
    a = points
    d = np.zeros((2, n_points, 2))
    d[0, :, 0] = 1.0
    d[1, :, 1] = 1.0

    tape = _Tape()
    last = params.n_layers - 1
    for index, (W, b) in enumerate(zip(params.weights, params.biases)):
        layer = _Layer(a_prev=a, d_prev=d)
        z = a @ W.T + b
        dz = d @ W.T
        if index == last:
            tape.layers.append(layer)
            tape.value = z[:, 0]
            tape.gradient = dz[:, :, 0].T
            break
        t = np.tanh(z)
        s = 1.0 - t * t
        layer.t, layer.s, layer.dz = t, s, dz
        tape.layers.append(layer)
        a = t
        d = s[None, :, :] * dz
    return tape


def network_backward(
    params: MLPParams,
    tape: _Tape,
    value_bar: np.ndarray,
    gradient_bar: np.ndarray,
) -> MLPParams:
    """
    Reverse sweep of ``network_forward``.

    Args:
        value_bar: (P,) adjoint of w^NN
        gradient_bar: (P, 2) adjoint of grad w^NN

    Returns:
        Parameter gradients packed as MLPParams
    """
    n = params.n_layers
    grad_w: List[np.ndarray] = [np.empty(0)] * n
    grad_b: List[np.ndarray] = [np.empty(0)] * n

    # output layer: w = a W^T + b, dw_k = d_k W^T
    out = tape.layers[-1]
    W = params.weights[-1]
    grad_w[-1] = value_bar[None, :] @ out.a_prev + sum(
        gradient_bar[:, k][None, :] @ out.d_prev[k] for k in range(2)
    )
    grad_b[-1] = np.array([np.sum(value_bar)])
    a_bar = value_bar[:, None] @ W
    d_bar = gradient_bar.T[:, :, None] * W[None, :, :]

    for index in range(n - 2, -1, -1):
        layer = tape.layers[index]
        W = params.weights[index]
        dz_bar = d_bar * layer.s[None, :, :]
        s_bar = np.sum(d_bar * layer.dz, axis=0)
        t_bar = a_bar - 2.0 * layer.t * s_bar
        z_bar = t_bar * layer.s

        grad_w[index] = z_bar.T @ layer.a_prev + sum(
            dz_bar[k].T @ layer.d_prev[k] for k in range(2)
        )
        grad_b[index] = np.sum(z_bar, axis=0)
        if index > 0:
            a_bar = z_bar @ W
            d_bar = dz_bar @ W

    return MLPParams(params.widths, grad_w, grad_b)


# ============================================================================
# Trial field
# ============================================================================

class UnitSquareMultiplier:
    """Phi(x, y) = x(1-x) y(1-y); zero on the boundary of the unit square."""

    def evaluate(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        x, y = points[..., 0], points[..., 1]
        px, py = x * (1.0 - x), y * (1.0 - y)
        grad = np.stack([(1.0 - 2.0 * x) * py, px * (1.0 - 2.0 * y)], axis=-1)
        return px * py, grad


def unit_multiplier() -> AnalyticField:
    """Phi = 1, for unconstrained networks."""
    return AnalyticField(lambda x: np.ones(x.shape[:-1]), lambda x: np.zeros(x.shape))


class TrialField:
    """
    u^NN = Phi w^NN + lift.

    Args:
        params: Network weights
        lift: Field matching the Dirichlet data on the boundary
        multiplier: Field vanishing on the Dirichlet boundary
    """

    def __init__(self, params: MLPParams, lift: Field, multiplier: Optional[Field] = None):
        self.params = params
        self.lift = lift
        self.multiplier = multiplier if multiplier is not None else UnitSquareMultiplier()

    @classmethod
    def for_problem(cls, params: MLPParams, spec: ProblemSpec) -> "TrialField":
        return cls(params, AnalyticField(spec.lift, spec.lift_grad))

    def with_params(self, params: MLPParams) -> "TrialField":
        return TrialField(params, self.lift, self.multiplier)

    def _combine(self, points: np.ndarray, tape: _Tape):
        phi, grad_phi = self.multiplier.evaluate(points)
        lift, grad_lift = self.lift.evaluate(points)
        w, grad_w = tape.value, tape.gradient
        value = phi * w + lift
        gradient = grad_phi * w[:, None] + phi[:, None] * grad_w + grad_lift
        return value, gradient, phi, grad_phi

    def evaluate(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Value (...,) and gradient (..., 2) at (..., 2) points."""
        points = np.asarray(points, dtype=float)
        shape = points.shape[:-1]
        flat = points.reshape(-1, 2)
        value, gradient, _, _ = self._combine(flat, network_forward(self.params, flat))
        return value.reshape(shape), gradient.reshape(*shape, 2)


def eval_with_gradient(field: TrialField, x) -> Tuple[float, np.ndarray]:
    """u^NN(x) and its exact spatial gradient at a single point."""
    point = np.asarray(x, dtype=float).reshape(1, 2)
    value, gradient = field.evaluate(point)
    return float(value[0]), gradient[0]


def loss_gradient(
    field: TrialField,
    mesh: Mesh,
    data: ProblemSpec,
    rule: QuadRule,
    assembler: Optional[ResidualAssembler] = None,
) -> Tuple[float, np.ndarray]:
    """
    R_h^2 and its gradient with respect to every weight and bias.

    The residuals go through the same assembly code as
    ``assemble_residuals``, so the returned R_h^2 matches ``loss`` exactly.

    Args:
        assembler: Prebuilt assembler for (mesh, data, rule), reused across calls

    Returns:
        (R_h^2, flat gradient in ``MLPParams.flatten`` order)

    Raises:
        NumericDomainError: On non-finite intermediate values
    """
    if assembler is None:
        assembler = ResidualAssembler(mesh, data, rule)
    elif assembler.mesh is not mesh:
        raise ValueError("assembler was built for a different mesh")

    points = assembler.flat_points
    n_elements, n_nodes = assembler.weights.shape

    tape = network_forward(field.params, points)
    value, gradient, phi, grad_phi = field._combine(points, tape)
    r = assembler.residuals_from_samples(
        value.reshape(n_elements, n_nodes), gradient.reshape(n_elements, n_nodes, 2)
    )
    loss_value = r.loss()

    u_bar, g_bar = assembler.loss_adjoint(r)
    u_bar = u_bar.reshape(-1)
    g_bar = g_bar.reshape(-1, 2)
    value_bar = phi * u_bar + np.sum(grad_phi * g_bar, axis=-1)
    gradient_bar = phi[:, None] * g_bar

    grads = network_backward(field.params, tape, value_bar, gradient_bar)
    return loss_value, ensure_finite(grads.flatten(), "loss gradient")
