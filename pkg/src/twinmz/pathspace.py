"""Path-mode states and the twin Mach-Zehnder network.

Planes are the cuts across the apparatus where states are compared:

* ``PLANE1`` -- input port R1 (one mode)
* ``PLANE2`` -- inside the first interferometer, modes (L2, R2); the
  pointer coupling happens here
* ``PLANE4`` -- between the interferometers, modes (L4, R4)
* ``PLANE6`` -- output ports, modes (L6, R6)

Two-mode planes always order their amplitudes as (L, R).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

SQRT2 = np.sqrt(2.0)

UNITARY_TOL = 1e-12
ORTHOGONAL_SELECTION_TOL = 1e-14


class ConfigurationError(ValueError):
    """A network matrix or preset violates the interferometer constraints."""


class OrthogonalSelectionError(ValueError):
    """Pre- and post-selected states are orthogonal; the weak value is undefined."""


class Plane(enum.IntEnum):
    PLANE1 = 1
    PLANE2 = 2
    PLANE4 = 4
    PLANE6 = 6

    @property
    def modes(self) -> tuple[str, ...]:
        return _MODES[self]

    def index(self, mode: str) -> int:
        try:
            return self.modes.index(mode)
        except ValueError:
            raise ValueError(f"mode {mode!r} does not exist in {self.name}") from None

    @classmethod
    def of_mode(cls, mode: str) -> "Plane":
        for plane, modes in _MODES.items():
            if mode in modes:
                return plane
        raise ValueError(f"unknown path mode {mode!r}")


_MODES = {
    Plane.PLANE1: ("R1",),
    Plane.PLANE2: ("L2", "R2"),
    Plane.PLANE4: ("L4", "R4"),
    Plane.PLANE6: ("L6", "R6"),
}

BLOCKABLE = frozenset({"L3", "L4", "R4"})


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PathState:
    """Complex amplitudes over the modes of one plane."""

    plane: Plane
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.shape != (len(self.plane.modes),):
            raise ValueError(
                f"{self.plane.name} has {len(self.plane.modes)} modes, got shape {amps.shape}"
            )
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, mode: str, coefficient: complex = 1.0) -> "PathState":
        plane = Plane.of_mode(mode)
        amps = np.zeros(len(plane.modes), dtype=complex)
        amps[plane.index(mode)] = coefficient
        return cls(plane, amps)

    @classmethod
    def zero(cls, plane: Plane) -> "PathState":
        return cls(plane, np.zeros(len(plane.modes), dtype=complex))

    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    @property
    def normalized(self) -> bool:
        return abs(self.norm2() - 1.0) <= 1e-12

    def normalize(self) -> "PathState":
        n2 = self.norm2()
        if n2 == 0.0:
            raise ValueError("cannot normalize the zero state")
        return PathState(self.plane, self.amplitudes / np.sqrt(n2))

    def amplitude(self, mode: str) -> complex:
        return complex(self.amplitudes[self.plane.index(mode)])

    def inner(self, other: "PathState") -> complex:
        """Return <self|other>."""
        if other.plane != self.plane:
            raise ValueError(f"plane mismatch: {self.plane.name} vs {other.plane.name}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def allclose(self, other: "PathState", atol: float = 1e-12) -> bool:
        return self.plane == other.plane and np.allclose(
            self.amplitudes, other.amplitudes, rtol=0.0, atol=atol
        )

    def __repr__(self) -> str:
        terms = ", ".join(
            f"{m}: {complex(a):.6g}" for m, a in zip(self.plane.modes, self.amplitudes)
        )
        return f"PathState({self.plane.name}; {terms})"


@dataclass(frozen=True)
class ProjectorObservable:
    """The projector |mode><mode| on one plane."""

    plane: Plane
    mode: str

    def __post_init__(self):
        self.plane.index(self.mode)

    @classmethod
    def on(cls, mode: str) -> "ProjectorObservable":
        return cls(Plane.of_mode(mode), mode)

    def matrix(self) -> np.ndarray:
        n = len(self.plane.modes)
        m = np.zeros((n, n), dtype=complex)
        i = self.plane.index(self.mode)
        m[i, i] = 1.0
        return m

    def apply(self, state: PathState, power: int = 1) -> PathState:
        if state.plane != self.plane:
            raise ValueError(f"plane mismatch: {state.plane.name} vs {self.plane.name}")
        return PathState(self.plane, np.linalg.matrix_power(self.matrix(), power) @ state.amplitudes)


# Default network: any matrices satisfying the checks in NetworkConfig are valid.
DEFAULT_BS1_COLUMN = np.array([1j, 1.0]) / SQRT2
DEFAULT_U1 = np.array([[1.0, -1j], [1j, -1.0]]) / SQRT2
DEFAULT_U2 = np.array([[-1.0, -1j], [-1j, -1.0]]) / SQRT2


@dataclass(frozen=True)
class NetworkConfig:
    """The twin Mach-Zehnder as a chain of linear stages.

    ``u1`` maps plane 2 (L2, R2) to plane 4 (L4, R4) and folds in the M1/M2
    mirrors, BS2 and the arm phases of the first interferometer. ``u2`` maps
    plane 4 to plane 6 (L6, R6). Blockers are projectors: ``L3`` removes the
    R2-derived arm before BS2, ``L4``/``R4`` remove plane-4 modes. The phase
    window multiplies the L4-derived arm (path R5) by ``exp(i*phase_window)``.
    """

    u1: np.ndarray = field(default_factory=lambda: DEFAULT_U1.copy())
    u2: np.ndarray = field(default_factory=lambda: DEFAULT_U2.copy())
    bs1_column: np.ndarray = field(default_factory=lambda: DEFAULT_BS1_COLUMN.copy())
    blockers: frozenset = frozenset()
    phase_window: float = 0.0
    class_id: int | None = None

    def __post_init__(self):
        u1 = _frozen(self.u1)
        u2 = _frozen(self.u2)
        col = _frozen(self.bs1_column)
        object.__setattr__(self, "u1", u1)
        object.__setattr__(self, "u2", u2)
        object.__setattr__(self, "bs1_column", col)
        object.__setattr__(self, "blockers", frozenset(self.blockers))
        object.__setattr__(self, "phase_window", float(self.phase_window))
        unknown = self.blockers - BLOCKABLE
        if unknown:
            raise ConfigurationError(f"unknown blockers {sorted(unknown)}; allowed {sorted(BLOCKABLE)}")
        if self.class_id not in (None, 0, 1, 2, 3):
            raise ConfigurationError(f"class_id must be 0..3 or None, got {self.class_id!r}")
        self._validate()

    def _validate(self):
        for name, u in (("u1", self.u1), ("u2", self.u2)):
            if u.shape != (2, 2):
                raise ConfigurationError(f"{name} must be 2x2, got {u.shape}")
            if not np.allclose(u.conj().T @ u, np.eye(2), rtol=0.0, atol=UNITARY_TOL):
                raise ConfigurationError(f"{name} is not unitary within {UNITARY_TOL}")
        if self.bs1_column.shape != (2,):
            raise ConfigurationError("bs1_column must have two entries")
        if abs(np.vdot(self.bs1_column, self.bs1_column).real - 1.0) > UNITARY_TOL:
            raise ConfigurationError("bs1_column must be a unit vector")

        def close(a, b):
            return np.allclose(a, b, rtol=0.0, atol=UNITARY_TOL)

        bright = self.u1 @ (np.array([1j, 1.0]) / SQRT2)
        if not close(bright, [0.0, -1.0]):
            raise ConfigurationError("u1 must send (i|L2> + |R2>)/sqrt2 to -|R4> (bright-path constraint)")
        r6 = self.u2[1]
        if not close(r6 @ self.u1, [-1j, 0.0]):
            raise ConfigurationError("<R6|u2 u1 must equal (-i, 0)")
        if not close(r6 @ np.diag([0.0, 1.0]) @ self.u1, [-0.5j, 0.5]):
            raise ConfigurationError("<R6|u2 diag(0,1) u1 must equal (-i/2, 1/2)")
        if not close(r6 @ np.diag([-1.0, 1.0]) @ self.u1, [0.0, 1.0]):
            raise ConfigurationError("<R6|u2 diag(-1,1) u1 must equal (0, 1)")

    def with_(self, **changes) -> "NetworkConfig":
        params = dict(
            u1=self.u1,
            u2=self.u2,
            bs1_column=self.bs1_column,
            blockers=self.blockers,
            phase_window=self.phase_window,
            class_id=self.class_id,
        )
        params.update(changes)
        return NetworkConfig(**params)

    def stages(self, start: Plane, stop: Plane) -> list[tuple[str, np.ndarray]]:
        """Forward stage matrices (name, matrix) taking ``start`` to ``stop``."""
        if start > stop:
            raise ValueError(f"cannot propagate forward from {start.name} to {stop.name}")
        out = []
        if start <= Plane.PLANE1 < stop:
            out.append(("bs1", self.bs1_column.reshape(2, 1)))
        if start <= Plane.PLANE2 < stop:
            keep = np.diag([1.0, 0.0 if "L3" in self.blockers else 1.0]).astype(complex)
            out.append(("block_L3", keep))
            out.append(("u1", self.u1))
            keep4 = np.diag(
                [0.0 if "L4" in self.blockers else 1.0, 0.0 if "R4" in self.blockers else 1.0]
            ).astype(complex)
            out.append(("block_4", keep4))
        if start <= Plane.PLANE4 < stop:
            out.append(("window", np.diag([np.exp(1j * self.phase_window), 1.0])))
            out.append(("u2", self.u2))
        return out

    def transfer(self, start: Plane, stop: Plane) -> np.ndarray:
        m = np.eye(len(start.modes), dtype=complex)
        for _, stage in self.stages(start, stop):
            m = stage @ m
        return m

    # serialization: matrices as row-major arrays of [re, im] pairs
    def to_dict(self) -> dict:
        def enc(a):
            a = np.asarray(a)
            if a.ndim == 1:
                return [[float(z.real), float(z.imag)] for z in a]
            return [enc(row) for row in a]

        return {
            "U1": enc(self.u1),
            "U2": enc(self.u2),
            "bs1_column": enc(self.bs1_column),
            "blockers": sorted(self.blockers),
            "phase_window": self.phase_window,
            "class_id": self.class_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkConfig":
        allowed = {"U1", "U2", "bs1_column", "blockers", "phase_window", "class_id"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigurationError(f"unknown network keys: {sorted(unknown)}")
        kwargs = {}
        for key, attr in (("U1", "u1"), ("U2", "u2"), ("bs1_column", "bs1_column")):
            if key in data:
                kwargs[attr] = _decode_complex(data[key], key)
        if "blockers" in data:
            kwargs["blockers"] = frozenset(data["blockers"])
        if "phase_window" in data:
            kwargs["phase_window"] = float(data["phase_window"])
        if "class_id" in data:
            kwargs["class_id"] = data["class_id"]
        return cls(**kwargs)


def _decode_complex(value, key: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape[-1] != 2:
        raise ConfigurationError(f"{key}: entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def forward_propagate(net: NetworkConfig, state: PathState, to: Plane) -> PathState:
    return PathState(to, net.transfer(state.plane, to) @ state.amplitudes)


def backward_propagate(net: NetworkConfig, state: PathState, to: Plane) -> PathState:
    """Propagate a (post-selected) ket backward with the adjoint stages.

    The result is the ket whose bra, taken at ``to``, reproduces
    ``<state| transfer`` -- blockers are self-adjoint and act as-is.
    """
    if to > state.plane:
        raise ValueError(f"cannot propagate backward from {state.plane.name} to {to.name}")
    return PathState(to, net.transfer(to, state.plane).conj().T @ state.amplitudes)


def weak_value(pre: PathState, post: PathState, obs: ProjectorObservable, m: int = 1) -> complex:
    """<post|obs^m|pre> / <post|pre>."""
    if m < 1:
        raise ValueError("moment order m must be a positive integer")
    if not (pre.plane == post.plane == obs.plane):
        raise ValueError("pre, post and observable must share a plane")
    denom = post.inner(pre)
    if abs(denom) < ORTHOGONAL_SELECTION_TOL:
        raise OrthogonalSelectionError(
            f"|<post|pre>| = {abs(denom):.3g} < {ORTHOGONAL_SELECTION_TOL}: weak value undefined"
        )
    return post.inner(obs.apply(pre, m)) / denom


def expectation(pre: PathState, obs: ProjectorObservable) -> float:
    if pre.plane != obs.plane:
        raise ValueError("state and observable must share a plane")
    return float(pre.inner(obs.apply(pre)).real)


CLASS_LABELS = {0: "phase window pi on R5", 1: "unobstructed", 2: "dark path L4 blocked"}


def class_network(class_id: int, base: NetworkConfig | None = None) -> NetworkConfig:
    """Network for one measurement class (3 is the calibration configuration)."""
    base = base or NetworkConfig()
    if class_id == 0:
        return base.with_(blockers=frozenset(), phase_window=np.pi, class_id=0)
    if class_id == 1:
        return base.with_(blockers=frozenset(), phase_window=0.0, class_id=1)
    if class_id == 2:
        return base.with_(blockers=frozenset({"L4"}), phase_window=0.0, class_id=2)
    if class_id == 3:
        return base.with_(blockers=frozenset({"L3", "R4"}), phase_window=0.0, class_id=3)
    raise ValueError(f"class_id must be 0, 1, 2 (or 3 for calibration), got {class_id!r}")


def class_selection(class_id: int, base: NetworkConfig | None = None):
    """Return (network, pre-selection, post-selection) at plane 2 for a class."""
    if class_id not in (0, 1, 2):
        raise ValueError(f"class_id must be 0, 1 or 2, got {class_id!r}")
    net = class_network(class_id, base)
    pre = forward_propagate(net, PathState.basis("R1"), Plane.PLANE2)
    post = backward_propagate(net, PathState.basis("R6"), Plane.PLANE2)
    return net, pre, post


def class_weak_values(mode: str = "L2", base: NetworkConfig | None = None) -> dict[int, complex]:
    obs = ProjectorObservable.on(mode)
    out = {}
    for c in (0, 1, 2):
        _, pre, post = class_selection(c, base)
        out[c] = weak_value(pre, post, obs)
    return out


def random_state(rng: np.random.Generator, plane: Plane) -> PathState:
    n = len(plane.modes)
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return PathState(plane, v / np.linalg.norm(v))


def superpose(states: Iterable[PathState], coefficients: Sequence[complex]) -> PathState:
    states = list(states)
    amps = sum(c * s.amplitudes for c, s in zip(coefficients, states))
    return PathState(states[0].plane, amps)
