"""Cat-qubit preparation, gates, and the heralded-link protocol verifier.

The logical qubit lives in the two-photon-driven Kerr oscillator

    H = -K a^dag^2 a^2 + E_p(t) (a^dag^2 + a^2),

whose degenerate eigenstates |alpha>, |-alpha> (alpha^2 = E_p / K) span the
cat manifold.  Driving ramps E_p from zero, mapping the Fock states |0>, |1>
adiabatically onto the even and odd cats used as logical |0>, |1>.  Gates are
generated by an added single-photon drive (X rotations), free Kerr evolution
with the two-photon drive off (Z rotations), and a linear cavity-cavity
coupling (entangling G rotations); a seven-stage sequence of these composes a
CNOT.

All gate stages have piecewise-constant Hamiltonians, so lossless evolution
is propagated exactly through per-stage eigendecompositions.  Lossy gate
fidelities use a no-jump + one-jump expansion of the master equation (the
probability of two photon-loss events over a gate is negligible at the loss
ratios of interest; the truncation is cross-checked against full
master-equation integration in the test suite).  Driving, with its smooth
time-dependent pulse, goes through the adaptive master-equation integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from . import qcore as qc
from .dynamics import TimeDependentHamiltonian, evolve
from .pulses import PulseSchedule, reversed_schedule

__all__ = [
    "CatQubitParams",
    "GateReportRow",
    "GateResult",
    "DriveResult",
    "ProtocolResult",
    "TruncationOverflowError",
    "DRIVE_RAMP_KT",
    "DEFAULT_AMPLITUDE_RATIOS",
    "logical_states",
    "logical_superposition",
    "adiabatic_drive_pulse",
    "drive",
    "undrive",
    "gate_x",
    "gate_z",
    "gate_g",
    "cnot",
    "gate_report",
    "simulate_link_protocol",
]

# Dimensionless drive duration K * (1.3 tau).  Calibrated so that the default
# adiabatic ramp reproduces the anchored drive fidelity at K/kappa = 1e3
# while staying adiabatic (>= 0.999) without loss.
DRIVE_RAMP_KT = 7.2

# (single-photon drive, cavity coupling) expressed as fractions of the
# two-photon drive amplitude E_p0, per loss ratio K/kappa.
DEFAULT_AMPLITUDE_RATIOS = {
    1e3: (10.0, 15.0),
    1e4: (20.0, 25.0),
    1e5: (45.0, 55.0),
}

TWO_QUBIT_DIM = 16  # per-cavity truncation for two-cavity gate simulations
LEAKAGE_FLAG_THRESHOLD = 0.05


class TruncationOverflowError(RuntimeError):
    """Raised when significant population reaches the top Fock levels."""


@dataclass(frozen=True)
class CatQubitParams:
    """One Kerr-cat cavity: nonlinearity, loss, target cat amplitude.

    ``kerr`` is the Kerr rate K in rad/s, ``kappa`` the single-photon loss
    rate in 1/s, ``alpha`` the real target cat amplitude.  The steady
    two-photon drive amplitude is K * alpha^2 by construction.
    """

    kerr: float
    kappa: float = 0.0
    alpha: float = math.sqrt(2.0)
    dim: int = 20

    def __post_init__(self):
        if self.kerr <= 0:
            raise ValueError("kerr rate must be positive")
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    @property
    def two_photon_amplitude(self) -> float:
        """Steady-state two-photon drive E_p0 = K alpha^2 (rad/s)."""
        return self.kerr * self.alpha**2

    @property
    def loss_ratio(self) -> float:
        return self.kerr / self.kappa if self.kappa > 0 else math.inf


@dataclass(frozen=True)
class GateReportRow:
    operation: str
    kerr: float
    kappa: float
    duration_s: float
    duration_kt: float
    fidelity: float

    def as_dict(self) -> dict:
        return {
            "operation": self.operation,
            "K_rad_per_s": self.kerr,
            "kappa_per_s": self.kappa,
            "duration_s": self.duration_s,
            "duration_Kt": self.duration_kt,
            "fidelity": self.fidelity,
        }


@dataclass(frozen=True)
class GateResult:
    """Simulated gate outcome: averaged fidelity plus per-state detail.

    ``final_states`` holds the losslessly propagated outputs (they feed the
    manifold-leakage diagnostic); the fidelities themselves include loss.
    """

    operation: str
    params: CatQubitParams
    duration_s: float
    fidelity: float
    state_fidelities: dict[str, float]
    leakage: float
    leakage_flagged: bool
    final_states: dict[str, qc.QState] = field(default_factory=dict, repr=False)

    @property
    def row(self) -> GateReportRow:
        return GateReportRow(
            operation=self.operation,
            kerr=self.params.kerr,
            kappa=self.params.kappa,
            duration_s=self.duration_s,
            duration_kt=self.duration_s * self.params.kerr,
            fidelity=self.fidelity,
        )


@dataclass(frozen=True)
class DriveResult:
    state: qc.QState
    fidelity: float
    target: qc.QState
    pulse: PulseSchedule

    @property
    def duration_s(self) -> float:
        return self.pulse.duration


# -- logical basis ----------------------------------------------------------


def logical_states(params: CatQubitParams) -> tuple[qc.QState, qc.QState]:
    """(logical zero, logical one) = (even cat, odd cat)."""
    return (qc.cat_state(params.alpha, "even", params.dim),
            qc.cat_state(params.alpha, "odd", params.dim))


def logical_superposition(params: CatQubitParams, c0: complex, c1: complex) -> qc.QState:
    zero, one = logical_states(params)
    vec = complex(c0) * zero.data + complex(c1) * one.data
    return qc.QState((params.dim,), vec / np.linalg.norm(vec))


def _kerr_op(dim: int, kerr: float) -> np.ndarray:
    a = qc.annihilation(dim).data
    ad = a.conj().T
    return -kerr * (ad @ ad @ a @ a)


def _two_photon_op(dim: int) -> np.ndarray:
    a = qc.annihilation(dim).data
    ad = a.conj().T
    return ad @ ad + a @ a


def _two_photon_orthogonal_op(dim: int) -> np.ndarray:
    a = qc.annihilation(dim).data
    ad = a.conj().T
    return 1j * (ad @ ad - a @ a)


def _single_photon_op(dim: int) -> np.ndarray:
    a = qc.annihilation(dim).data
    return a + a.conj().T


def _stabilized_h(params: CatQubitParams, dim: Optional[int] = None) -> np.ndarray:
    d = dim or params.dim
    return _kerr_op(d, params.kerr) + params.two_photon_amplitude * _two_photon_op(d)


# -- driving / undriving -----------------------------------------------------


def adiabatic_drive_pulse(params: CatQubitParams,
                          duration_kt: float = DRIVE_RAMP_KT) -> PulseSchedule:
    """Smooth two-photon ramp E_p(t) = E_p0 (1 - exp(-(t/tau)^4)).

    The full pulse lasts 1.3 tau; ``duration_kt`` fixes the dimensionless
    product K * 1.3 tau (default calibrated against the anchored drive
    fidelity at K/kappa = 1e3).
    """
    duration = duration_kt / params.kerr
    tau = duration / 1.3
    ep0 = params.two_photon_amplitude

    def two_photon(t: float) -> complex:
        return ep0 * (1.0 - math.exp(-((t / tau) ** 4)))

    return PulseSchedule(duration=duration, channels={"two_photon": two_photon})


_CHANNEL_OPS = {
    "two_photon": _two_photon_op,
    "two_photon_orthogonal": _two_photon_orthogonal_op,
    "single_photon": _single_photon_op,
}


def _pulse_hamiltonian(params: CatQubitParams, pulse: PulseSchedule) -> TimeDependentHamiltonian:
    dim = params.dim
    static = qc.QOperator((dim,), _kerr_op(dim, params.kerr))
    terms = []
    for name, fn in pulse.channels.items():
        try:
            op = _CHANNEL_OPS[name](dim)
        except KeyError:
            raise ValueError(f"unknown drive channel {name!r}") from None
        terms.append((qc.QOperator((dim,), op), fn))
    return TimeDependentHamiltonian(static, tuple(terms), (0.0, pulse.duration),
                                    breakpoints=pulse.breakpoints)


def _fock_coefficients(state: qc.QState) -> tuple[complex, complex]:
    c0 = complex(state.data[0])
    c1 = complex(state.data[1])
    rest = 1.0 - abs(c0) ** 2 - abs(c1) ** 2
    if rest > 1e-9:
        raise ValueError("drive input must lie in span{|0>, |1>}")
    return c0, c1


def _check_truncation(states: Sequence[qc.QState], dim: int):
    worst = 0.0
    for s in states:
        if s.kind == "pure":
            pop = float(np.sum(np.abs(s.data[dim - 2:]) ** 2))
        else:
            pop = float(np.real(s.data[dim - 2, dim - 2] + s.data[dim - 1, dim - 1]))
        worst = max(worst, pop)
    if worst > 1e-6:
        raise TruncationOverflowError(
            f"population {worst:.2e} in the top two Fock levels; increase dim")


def _schedule_end_alpha(params: CatQubitParams, pulse: PulseSchedule) -> float:
    """Cat amplitude implied by the two-photon drive value at the pulse end.

    The smooth ramp only approaches E_p0 asymptotically, so the cat actually
    produced at t = 1.3 tau is slightly smaller than ``params.alpha``; drive
    and undrive fidelities are reported against this achieved amplitude.
    """
    ep_end = abs(complex(pulse.channels["two_photon"](pulse.duration)))
    return math.sqrt(ep_end / params.kerr) if ep_end > 0 else params.alpha


def drive(params: CatQubitParams, pulse: Optional[PulseSchedule] = None,
          state: Optional[qc.QState] = None, rel_tol: float = 1e-8,
          target_alpha: Optional[float] = None) -> DriveResult:
    """Map Fock-basis input onto the parity-matched cat superposition.

    With input c0 |0> + c1 |1>, the target is c0 |C+> + c1 |C-> (the two cat
    branches stay exactly degenerate along the ramp, so no relative phase
    accumulates).  Evolution includes single-photon loss at ``params.kappa``.
    The target amplitude follows the final value of the two-photon channel
    unless ``target_alpha`` overrides it.
    """
    if pulse is None:
        pulse = adiabatic_drive_pulse(params)
    if state is None:
        state = qc.fock_state(0, params.dim)
    if target_alpha is None:
        target_alpha = _schedule_end_alpha(params, pulse)
    c0, c1 = _fock_coefficients(state)
    zero = qc.cat_state(target_alpha, "even", params.dim)
    one = qc.cat_state(target_alpha, "odd", params.dim)
    tvec = c0 * zero.data + c1 * one.data
    target = qc.QState((params.dim,), tvec / np.linalg.norm(tvec))

    h = _pulse_hamiltonian(params, pulse)
    collapse = [(qc.annihilation(params.dim), params.kappa)] if params.kappa > 0 else []
    traj = evolve(h, collapse, state, n_samples=9, rel_tol=rel_tol)
    _check_truncation(traj.states, params.dim)
    final = traj.final_state
    return DriveResult(state=final, fidelity=qc.state_fidelity(final, target),
                       target=target, pulse=pulse)


def undrive(params: CatQubitParams, pulse: Optional[PulseSchedule] = None,
            state: Optional[qc.QState] = None, rel_tol: float = 1e-8) -> DriveResult:
    """Time-reversed drive: cat superposition back to the Fock basis.

    The input is decomposed in the cat basis at the amplitude where the
    reversed schedule starts (the forward schedule's end value); by default
    the even cat at that amplitude is undriven to |0>.
    """
    if pulse is None:
        pulse = adiabatic_drive_pulse(params)
    start_alpha = _schedule_end_alpha(params, pulse)
    rev = reversed_schedule(pulse)
    if state is None:
        state = qc.cat_state(start_alpha, "even", params.dim)
    zero = qc.cat_state(start_alpha, "even", params.dim)
    one = qc.cat_state(start_alpha, "odd", params.dim)
    if state.kind != "pure":
        raise ValueError("undrive expects a pure input state")
    c0 = complex(np.vdot(zero.data, state.data))
    c1 = complex(np.vdot(one.data, state.data))
    weight = abs(c0) ** 2 + abs(c1) ** 2
    if weight < 0.98:
        raise ValueError(
            f"undrive input has only {weight:.3f} weight in the cat manifold")
    tvec = c0 * qc.fock_state(0, params.dim).data + c1 * qc.fock_state(1, params.dim).data
    target = qc.QState((params.dim,), tvec / np.linalg.norm(tvec))

    h = _pulse_hamiltonian(params, rev)
    collapse = [(qc.annihilation(params.dim), params.kappa)] if params.kappa > 0 else []
    traj = evolve(h, collapse, state, n_samples=9, rel_tol=rel_tol)
    _check_truncation(traj.states, params.dim)
    final = traj.final_state
    return DriveResult(state=final, fidelity=qc.state_fidelity(final, target),
                       target=target, pulse=rev)


# -- piecewise-constant stage engine -----------------------------------------


@dataclass(frozen=True)
class _Stage:
    hamiltonian: np.ndarray
    duration: float


class _StageEngine:
    """Exact lossless propagation and one-jump lossy fidelities over a fixed
    stage list, with eigendecompositions cached across input states."""

    # quadrature density for the one-jump integral, points per unit K*t
    GRID_PER_KT = 400

    def __init__(self, stages: Sequence[_Stage], jump_ops: Sequence[tuple[np.ndarray, float]],
                 kerr: float):
        self.stages = list(stages)
        self.jump_ops = [(np.asarray(op), float(rate)) for op, rate in jump_ops]
        self.kerr = kerr
        self._herm = None
        self._eff = None

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self.stages)

    def _hermitian_factors(self):
        if self._herm is None:
            self._herm = [scipy.linalg.eigh(s.hamiltonian) for s in self.stages]
        return self._herm

    def _effective_factors(self):
        if self._eff is None:
            d = self.stages[0].hamiltonian.shape[0]
            damp = np.zeros((d, d), dtype=complex)
            for op, rate in self.jump_ops:
                damp += 0.5j * rate * (op.conj().T @ op)
            eff = []
            for s in self.stages:
                lam, v = scipy.linalg.eig(s.hamiltonian - damp)
                eff.append((lam, v, np.linalg.inv(v), s.duration))
            self._eff = eff
        return self._eff

    def propagate_pure(self, psi0: np.ndarray) -> np.ndarray:
        psi = np.asarray(psi0, dtype=complex)
        for (lam, v), stage in zip(self._hermitian_factors(), self.stages):
            psi = v @ (np.exp(-1j * lam * stage.duration) * (v.conj().T @ psi))
        return psi

    def lossy_fidelity(self, psi0: np.ndarray, target: np.ndarray) -> float:
        """<t|rho(T)|t> to first order in the jump number."""
        if not self.jump_ops or all(rate == 0 for _, rate in self.jump_ops):
            return float(abs(np.vdot(target, self.propagate_pure(psi0))) ** 2)
        eff = self._effective_factors()
        psis = [np.asarray(psi0, dtype=complex)]
        for lam, v, w, dur in eff:
            psis.append(v @ (np.exp(-1j * lam * dur) * (w @ psis[-1])))
        fid = abs(np.vdot(target, psis[-1])) ** 2

        phis = [np.asarray(target, dtype=complex)]
        for lam, v, w, dur in reversed(eff):
            phis.append(w.conj().T @ (np.exp(1j * lam.conj() * dur) * (v.conj().T @ phis[-1])))
        phis = phis[::-1]

        for k, (lam, v, w, dur) in enumerate(eff):
            n = max(129, int(self.GRID_PER_KT * dur * self.kerr) + 1)
            s = np.linspace(0.0, dur, n)
            coeff = w @ psis[k]
            psi_grid = v @ (np.exp(-1j * np.outer(lam, s)) * coeff[:, None])
            ell = v.conj().T @ phis[k + 1]
            phi_grid = w.conj().T @ (np.exp(1j * np.outer(lam.conj(), dur - s)) * ell[:, None])
            for op, rate in self.jump_ops:
                amp = np.einsum("ij,ij->j", phi_grid.conj(), op @ psi_grid)
                fid += rate * np.trapezoid(np.abs(amp) ** 2, s)
        return float(min(fid, 1.0))


# -- gate constructions -------------------------------------------------------


def _x_rotation_duration(params: CatQubitParams, theta: float, amplitude: float) -> float:
    return abs(theta) / (4.0 * params.alpha * amplitude)


def _z_rotation_duration(params: CatQubitParams, theta: float) -> float:
    # free Kerr evolution only advances the logical phase forward; negative
    # angles wrap to theta + 2 pi
    theta_eff = math.fmod(theta, 2.0 * math.pi)
    if theta_eff < 0:
        theta_eff += 2.0 * math.pi
    return theta_eff / params.kerr


def _g_rotation_duration(params: CatQubitParams, theta: float, coupling: float) -> float:
    return abs(theta) / (4.0 * params.alpha**2 * coupling)


def _ideal_rotation(axis: str, theta: float) -> np.ndarray:
    if axis == "x":
        gen = np.array([[0, 1], [1, 0]], dtype=complex)
    elif axis == "z":
        gen = np.array([[1, 0], [0, -1]], dtype=complex)
    else:
        raise ValueError(axis)
    return scipy.linalg.expm(-0.5j * theta * gen)


_SINGLE_QUBIT_TEST_STATES = {
    "zero": (1.0, 0.0),
    "one": (0.0, 1.0),
    "plus": (1 / math.sqrt(2), 1 / math.sqrt(2)),
    "minus": (1 / math.sqrt(2), -1 / math.sqrt(2)),
    "plus_i": (1 / math.sqrt(2), 1j / math.sqrt(2)),
    "minus_i": (1 / math.sqrt(2), -1j / math.sqrt(2)),
}


def _single_qubit_gate(params: CatQubitParams, operation: str,
                       stages: Sequence[_Stage], ideal: np.ndarray) -> GateResult:
    dim = params.dim
    jump = [(qc.annihilation(dim).data, params.kappa)] if params.kappa > 0 else []
    engine = _StageEngine(stages, jump, params.kerr)
    zero, one = logical_states(params)
    basis = np.stack([zero.data, one.data], axis=1)  # dim x 2

    fids: dict[str, float] = {}
    finals: dict[str, qc.QState] = {}
    leakage = 0.0
    for name, (c0, c1) in _SINGLE_QUBIT_TEST_STATES.items():
        psi0 = basis @ np.array([c0, c1], dtype=complex)
        tcoef = ideal @ np.array([c0, c1], dtype=complex)
        tvec = basis @ tcoef
        tvec /= np.linalg.norm(tvec)
        if params.kappa > 0:
            fids[name] = engine.lossy_fidelity(psi0, tvec)
        else:
            fids[name] = float(abs(np.vdot(tvec, engine.propagate_pure(psi0))) ** 2)
        psi_f = engine.propagate_pure(psi0)
        psi_f = psi_f / np.linalg.norm(psi_f)
        finals[name] = qc.QState((dim,), psi_f, normalize=False)
        in_manifold = float(np.sum(np.abs(basis.conj().T @ psi_f) ** 2))
        leakage = max(leakage, 1.0 - in_manifold)

    fid = float(np.mean(list(fids.values())))
    return GateResult(operation=operation, params=params,
                      duration_s=engine.duration, fidelity=fid,
                      state_fidelities=fids, leakage=leakage,
                      leakage_flagged=leakage > LEAKAGE_FLAG_THRESHOLD,
                      final_states=finals)


def gate_x(params: CatQubitParams, theta: float, drive_amplitude: float) -> GateResult:
    """Rotation about the logical X axis via a single-photon drive.

    The drive amplitude must satisfy ``drive_amplitude << K alpha^2`` to stay
    inside the qubit manifold; the rotation lasts theta / (4 alpha E_x) with
    the drive sign carrying the rotation sense.
    """
    if drive_amplitude <= 0:
        raise ValueError("drive_amplitude must be positive")
    dim = params.dim
    dur = _x_rotation_duration(params, theta, drive_amplitude)
    sign = 1.0 if theta >= 0 else -1.0
    h = _stabilized_h(params) + sign * drive_amplitude * _single_photon_op(dim)
    stages = [_Stage(h, dur)] if dur > 0 else []
    ideal = _ideal_rotation("x", theta)
    if not stages:
        stages = [_Stage(_stabilized_h(params), 0.0)]
    return _single_qubit_gate(params, f"X_{theta/math.pi:.3g}pi", stages, ideal)


def gate_z(params: CatQubitParams, theta: float) -> GateResult:
    """Rotation about the logical Z axis via free Kerr evolution.

    The two-photon drive is switched off and the cavity evolves under
    -K (a^dag a)^2 for t = theta / K (negative angles wrap forward).  Only
    quarter-turn multiples are exact logical rotations; arbitrary angles are
    reported against the ideal rotation as stated.
    """
    dim = params.dim
    n_op = qc.number_operator(dim).data
    h = -params.kerr * (n_op @ n_op)
    dur = _z_rotation_duration(params, theta)
    stages = [_Stage(h, dur)]
    ideal = _ideal_rotation("z", theta)
    return _single_qubit_gate(params, f"Z_{theta/math.pi:.3g}pi", stages, ideal)


def _two_qubit_ops(params: CatQubitParams, dim: int):
    a = qc.annihilation(dim)
    eye = qc.identity(dim)
    a1 = qc.tensor([a, eye]).data
    a2 = qc.tensor([eye, a]).data
    h0 = _stabilized_h(params, dim)
    h01 = np.kron(h0, np.eye(dim))
    h02 = np.kron(np.eye(dim), h0)
    return a1, a2, h01, h02


def _two_qubit_logical_basis(params: CatQubitParams, dim: int) -> np.ndarray:
    zero = qc.cat_state(params.alpha, "even", dim).data
    one = qc.cat_state(params.alpha, "odd", dim).data
    cols = [np.kron(x, y) for x in (zero, one) for y in (zero, one)]
    return np.stack(cols, axis=1)  # (dim^2) x 4, order 00,01,10,11


def gate_g(params: CatQubitParams, theta: float, coupling: float,
           dim_per_cavity: int = TWO_QUBIT_DIM) -> GateResult:
    """Two-qubit entangling rotation from a linear cavity-cavity coupling.

    Both cavities share ``params``.  Starting from the even-even cat product
    state, a quarter rotation (theta = pi/2) reaches the maximally entangled
    ((1+i)|00> + (1-i)|11>)/2 after t = pi / (8 alpha^2 E_c); general angles
    scale the duration linearly.  Fidelity is reported for this preparation.
    """
    if coupling <= 0:
        raise ValueError("coupling must be positive")
    dim = dim_per_cavity
    a1, a2, h01, h02 = _two_qubit_ops(params, dim)
    sign = 1.0 if theta >= 0 else -1.0
    h = h01 + h02 + sign * coupling * (a1.conj().T @ a2 + a1 @ a2.conj().T)
    dur = _g_rotation_duration(params, theta, coupling)
    stages = [_Stage(h, dur)]
    jump = [(a1, params.kappa), (a2, params.kappa)] if params.kappa > 0 else []
    engine = _StageEngine(stages, jump, params.kerr)

    basis = _two_qubit_logical_basis(params, dim)
    psi0 = basis[:, 0]
    tcoef = math.cos(theta / 2) * np.array([1, 0, 0, 0], dtype=complex) \
        - 1j * math.sin(theta / 2) * np.array([0, 0, 0, 1], dtype=complex)
    tvec = basis @ tcoef
    tvec /= np.linalg.norm(tvec)

    if params.kappa > 0:
        fid = engine.lossy_fidelity(psi0, tvec)
    else:
        fid = float(abs(np.vdot(tvec, engine.propagate_pure(psi0))) ** 2)
    psi_f = engine.propagate_pure(psi0)
    psi_f /= np.linalg.norm(psi_f)
    leakage = 1.0 - float(np.sum(np.abs(basis.conj().T @ psi_f) ** 2))
    name = f"G_{theta/math.pi:.3g}pi"
    return GateResult(operation=name, params=params, duration_s=engine.duration,
                      fidelity=fid, state_fidelities={"even_even": fid},
                      leakage=leakage,
                      leakage_flagged=leakage > LEAKAGE_FLAG_THRESHOLD,
                      final_states={"even_even": qc.QState((dim, dim), psi_f,
                                                           normalize=False)})


def _cnot_stages(params: CatQubitParams, drive_amplitude: float, coupling: float,
                 dim: int) -> list[_Stage]:
    """Seven-stage decomposition X2(pi/2) X1(-pi/2) Z1(pi/2) G(pi/2)
    X1(-pi/2) Z1(-pi/2) X1(pi/2), rightmost applied first."""
    a1, a2, h01, h02 = _two_qubit_ops(params, dim)
    n1 = a1.conj().T @ a1
    x1 = a1 + a1.conj().T
    x2 = a2 + a2.conj().T
    kerr1_free = -params.kerr * (n1 @ n1)

    t_x = _x_rotation_duration(params, math.pi / 2, drive_amplitude)
    t_z_plus = _z_rotation_duration(params, math.pi / 2)
    t_z_minus = _z_rotation_duration(params, -math.pi / 2)
    t_g = _g_rotation_duration(params, math.pi / 2, coupling)

    h_x1_plus = h01 + h02 + drive_amplitude * x1
    h_x1_minus = h01 + h02 - drive_amplitude * x1
    h_x2_plus = h01 + h02 + drive_amplitude * x2
    h_z1 = kerr1_free + h02
    h_g = h01 + h02 + coupling * (a1.conj().T @ a2 + a1 @ a2.conj().T)

    return [
        _Stage(h_x1_plus, t_x),      # X1(+pi/2)
        _Stage(h_z1, t_z_minus),     # Z1(-pi/2) via 3/4 turn
        _Stage(h_x1_minus, t_x),     # X1(-pi/2)
        _Stage(h_g, t_g),            # G(pi/2)
        _Stage(h_z1, t_z_plus),      # Z1(+pi/2)
        _Stage(h_x1_minus, t_x),     # X1(-pi/2)
        _Stage(h_x2_plus, t_x),      # X2(+pi/2)
    ]


_CNOT_IDEAL = np.array([[1, 0, 0, 0],
                        [0, 1, 0, 0],
                        [0, 0, 0, 1],
                        [0, 0, 1, 0]], dtype=complex)

_TWO_QUBIT_BASIS_NAMES = ("00", "01", "10", "11")


def cnot(params: CatQubitParams, drive_amplitude: float, coupling: float,
         dim_per_cavity: int = TWO_QUBIT_DIM) -> GateResult:
    """Seven-stage CNOT with the first cavity as control.

    Fidelity is the mean state fidelity over the four logical basis states;
    duration is the sum of the stage durations.
    """
    dim = dim_per_cavity
    stages = _cnot_stages(params, drive_amplitude, coupling, dim)
    a1, a2, _, _ = _two_qubit_ops(params, dim)
    jump = [(a1, params.kappa), (a2, params.kappa)] if params.kappa > 0 else []
    engine = _StageEngine(stages, jump, params.kerr)
    basis = _two_qubit_logical_basis(params, dim)

    fids: dict[str, float] = {}
    finals: dict[str, qc.QState] = {}
    leakage = 0.0
    for idx, name in enumerate(_TWO_QUBIT_BASIS_NAMES):
        psi0 = basis[:, idx]
        tvec = basis @ _CNOT_IDEAL[:, idx]
        tvec /= np.linalg.norm(tvec)
        if params.kappa > 0:
            fids[name] = engine.lossy_fidelity(psi0, tvec)
        else:
            fids[name] = float(abs(np.vdot(tvec, engine.propagate_pure(psi0))) ** 2)
        psi_f = engine.propagate_pure(psi0)
        psi_f /= np.linalg.norm(psi_f)
        finals[name] = qc.QState((dim, dim), psi_f, normalize=False)
        leakage = max(leakage, 1.0 - float(np.sum(np.abs(basis.conj().T @ psi_f) ** 2)))

    fid = float(np.mean(list(fids.values())))
    return GateResult(operation="CNOT", params=params, duration_s=engine.duration,
                      fidelity=fid, state_fidelities=fids, leakage=leakage,
                      leakage_flagged=leakage > LEAKAGE_FLAG_THRESHOLD,
                      final_states=finals)


def gate_report(params: CatQubitParams, drive_ratio: float, coupling_ratio: float,
                drive_duration_kt: float = DRIVE_RAMP_KT,
                dim_per_cavity: int = TWO_QUBIT_DIM) -> list[GateReportRow]:
    """Rows (drive, undrive, X_pi/2, Z_pi/2, G_pi/2, CNOT) for one cavity
    configuration.

    ``drive_ratio`` and ``coupling_ratio`` divide the two-photon amplitude
    E_p0 to produce the single-photon drive and the cavity coupling; see
    ``DEFAULT_AMPLITUDE_RATIOS`` for the conventional choices per loss ratio.
    """
    ep0 = params.two_photon_amplitude
    e_x = ep0 / drive_ratio
    e_c = ep0 / coupling_ratio

    rows = []
    pulse = adiabatic_drive_pulse(params, duration_kt=drive_duration_kt)
    d = drive(params, pulse)
    rows.append(GateReportRow("drive", params.kerr, params.kappa,
                              d.duration_s, d.duration_s * params.kerr, d.fidelity))
    u = undrive(params, pulse)
    rows.append(GateReportRow("undrive", params.kerr, params.kappa,
                              u.duration_s, u.duration_s * params.kerr, u.fidelity))
    for result in (gate_x(params, math.pi / 2, e_x),
                   gate_z(params, math.pi / 2),
                   gate_g(params, math.pi / 2, e_c, dim_per_cavity),
                   cnot(params, e_x, e_c, dim_per_cavity)):
        rows.append(result.row)
    return rows


# -- heralded elementary-link protocol ----------------------------------------


@dataclass(frozen=True)
class ProtocolResult:
    """Outcome of the two-round heralded entanglement protocol.

    ``branches`` maps herald patterns to (probability, normalized state on
    the stationary pair).  For the two-step protocol a pattern is (step-I
    detector, step-II detector) with detectors indexed 1 and 2; for a single
    step it is just (detector,).
    """

    branches: dict[tuple, tuple[float, qc.QState]]
    success_probability: float

    @property
    def heralded_state(self) -> qc.QState:
        """State for the first herald pattern (same detector twice, or
        detector 1 for the one-step variant)."""
        key = min(self.branches)
        return self.branches[key][1]


def _damping_kraus(transmittance: float) -> list[np.ndarray]:
    """Amplitude-damping Kraus set on a three-level Fock mode."""
    eta = float(transmittance)
    k0 = np.diag([1.0, math.sqrt(eta), eta]).astype(complex)
    k1 = np.zeros((3, 3), dtype=complex)
    k1[0, 1] = math.sqrt(1 - eta)
    k1[1, 2] = math.sqrt(2 * eta * (1 - eta))
    k2 = np.zeros((3, 3), dtype=complex)
    k2[0, 2] = 1 - eta
    return [k0, k1, k2]


def _beamsplitter_unitary() -> np.ndarray:
    """50:50 beamsplitter on two three-level modes, b -> (b+d)/sqrt2,
    d -> (b-d)/sqrt2, restricted to <= 2 total photons (identity above)."""
    dim = 3
    u = np.eye(dim * dim, dtype=complex)

    def idx(nb, nd):
        return nb * dim + nd

    mapping = {
        (0, 0): {(0, 0): 1.0},
        (1, 0): {(1, 0): 1 / math.sqrt(2), (0, 1): 1 / math.sqrt(2)},
        (0, 1): {(1, 0): 1 / math.sqrt(2), (0, 1): -1 / math.sqrt(2)},
        (2, 0): {(2, 0): 0.5, (1, 1): 1 / math.sqrt(2), (0, 2): 0.5},
        (0, 2): {(2, 0): 0.5, (1, 1): -1 / math.sqrt(2), (0, 2): 0.5},
        (1, 1): {(2, 0): 1 / math.sqrt(2), (0, 2): -1 / math.sqrt(2)},
    }
    for src, dests in mapping.items():
        u[:, idx(*src)] = 0.0
        for dst, amp in dests.items():
            u[idx(*dst), idx(*src)] = amp
    return u


def _apply_photonic_channel(rho: np.ndarray, transmittance: float) -> np.ndarray:
    """Amplitude damping on both flying modes of a (2,2,3,3) state."""
    kraus = _damping_kraus(transmittance)
    d = rho.shape[0]
    out = np.zeros_like(rho)
    eye2 = np.eye(2)
    for ka in kraus:
        for kb in kraus:
            k = np.kron(np.kron(eye2, eye2), np.kron(ka, kb))
            out += k @ rho @ k.conj().T
    return out


def _detector_projectors(detectors: str) -> dict[int, np.ndarray]:
    """Projectors on the two-mode photonic space for 'detector 1 fired,
    detector 2 silent' and vice versa, after the beamsplitter."""
    def ket(nb, nd):
        v = np.zeros(9)
        v[nb * 3 + nd] = 1.0
        return v

    if detectors == "number_resolving":
        p1 = np.outer(ket(1, 0), ket(1, 0))
        p2 = np.outer(ket(0, 1), ket(0, 1))
    elif detectors == "threshold":
        p1 = np.outer(ket(1, 0), ket(1, 0)) + np.outer(ket(2, 0), ket(2, 0))
        p2 = np.outer(ket(0, 1), ket(0, 1)) + np.outer(ket(0, 2), ket(0, 2))
    else:
        raise ValueError("detectors must be 'number_resolving' or 'threshold'")
    return {1: p1.astype(complex), 2: p2.astype(complex)}


def _herald(rho: np.ndarray, detectors: str) -> dict[int, tuple[float, np.ndarray]]:
    """Measure the photonic modes; return unnormalized stationary-pair states
    by herald pattern, tracing the photons out."""
    u_bs = _beamsplitter_unitary()
    u = np.kron(np.eye(4), u_bs)
    rho_bs = u @ rho @ u.conj().T
    projs = _detector_projectors(detectors)
    out = {}
    for which, p in projs.items():
        full_p = np.kron(np.eye(4), p)
        branch = full_p @ rho_bs @ full_p.conj().T
        prob = float(np.real(np.trace(branch)))
        reduced = qc.partial_trace(
            qc.QState((2, 2, 3, 3), branch, normalize=False), [0, 1])
        out[which] = (prob, reduced.data)
    return out


def _reprepare_flying(rho_ac: np.ndarray) -> np.ndarray:
    """Flip both stationary qubits, then re-emit flying copies:
    |x>_a -> |x>_a |x>_b and likewise for (c, d)."""
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    flip = np.kron(x, x)
    rho_f = flip @ rho_ac @ flip.conj().T
    v_single = np.zeros((6, 2), dtype=complex)  # |x> -> |x>|x> on (qubit, mode3)
    v_single[0 * 3 + 0, 0] = 1.0
    v_single[1 * 3 + 1, 1] = 1.0
    v = np.kron(v_single, v_single)  # (a b c d) ordering
    rho_abcd = v @ rho_f @ v.conj().T
    # reorder (a, b, c, d) -> (a, c, b, d)
    dims = (2, 3, 2, 3)
    perm = (0, 2, 1, 3)
    t = rho_abcd.reshape(dims + dims)
    t = np.transpose(t, perm + tuple(4 + p for p in perm))
    return t.reshape(36, 36)


def simulate_link_protocol(loss_per_arm: float,
                           detectors: str = "number_resolving",
                           detector_efficiency: float = 1.0,
                           two_step: bool = True) -> ProtocolResult:
    """Exact small-space verification of the two-round heralded link.

    Stationary qubits are abstract two-level systems (logical gates taken as
    ideal); flying qubits are three-level Fock modes subjected to exact
    beamsplitter interference, with per-arm loss and detector inefficiency
    folded into one transmittance.  Returns the post-selected stationary-pair
    state per herald pattern and the total success probability.

    With both protocol steps the heralded state is a Bell state regardless of
    loss (loss only reduces the success probability); with ``two_step=False``
    and threshold detectors, double-emission events contaminate the herald.
    """
    if not 0.0 <= loss_per_arm <= 1.0:
        raise ValueError("loss_per_arm must lie in [0, 1]")
    if not 0.0 <= detector_efficiency <= 1.0:
        raise ValueError("detector_efficiency must lie in [0, 1]")
    eta = (1.0 - loss_per_arm) * detector_efficiency

    # step-I joint state: (1/2) sum_{x,y} |x>_a |y>_c |x>_b |y>_d
    psi = np.zeros(36, dtype=complex)
    for x in (0, 1):
        for y in (0, 1):
            vec_a = np.eye(2)[x]
            vec_c = np.eye(2)[y]
            vec_b = np.eye(3)[x]
            vec_d = np.eye(3)[y]
            psi += 0.5 * np.kron(np.kron(vec_a, vec_c), np.kron(vec_b, vec_d))
    rho = np.outer(psi, psi.conj())

    rho = _apply_photonic_channel(rho, eta)
    step1 = _herald(rho, detectors)

    if not two_step:
        branches = {}
        total = 0.0
        for det, (prob, rho_ac) in step1.items():
            total += prob
            state = qc.QState((2, 2), rho_ac / prob if prob > 0 else rho_ac,
                              normalize=False)
            branches[(det,)] = (prob, state)
        return ProtocolResult(branches=branches, success_probability=total)

    branches = {}
    total = 0.0
    for det1, (prob1, rho_ac) in step1.items():
        rho_full = _reprepare_flying(rho_ac)
        rho_full = _apply_photonic_channel(rho_full, eta)
        step2 = _herald(rho_full, detectors)
        for det2, (prob2, rho_final) in step2.items():
            prob = prob2  # rho_ac was unnormalized: prob2 already joint
            total += prob
            state = qc.QState((2, 2), rho_final / prob if prob > 0 else rho_final,
                              normalize=False)
            branches[(det1, det2)] = (prob, state)
    return ProtocolResult(branches=branches, success_probability=total)
