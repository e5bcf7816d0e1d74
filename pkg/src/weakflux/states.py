"""Pre- and post-selected state records and the Stern-Gerlach unit reduction."""

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CoherentState1D:
    """Normalised Gaussian packet (gamma/pi)^(1/4) exp(-gamma (x-x0)^2/2 + i p0 (x-x0)/hbar)."""

    gamma: float
    center: float
    momentum: float = 0.0
    hbar: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")


def coherent_amplitude(s, x):
    x = np.asarray(x, dtype=float)
    u = x - s.center
    return (s.gamma / np.pi) ** 0.25 * np.exp(-0.5 * s.gamma * u**2 + 1j * s.momentum * u / s.hbar)


@dataclass(frozen=True)
class SpinorAmplitudes:
    up: complex
    down: complex

    def __post_init__(self):
        norm = abs(self.up) ** 2 + abs(self.down) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"spinor is not normalised: |up|^2 + |down|^2 = {norm!r}")

    @classmethod
    def from_phase(cls, chi):
        """Equal-weight spinor (|up> + e^{i chi}|down>)/sqrt(2)."""
        return cls(complex(np.sqrt(0.5)), complex(np.sqrt(0.5) * np.exp(1j * chi)))

    @classmethod
    def normalized(cls, up, down):
        norm = np.sqrt(abs(up) ** 2 + abs(down) ** 2)
        if norm == 0:
            raise ValueError("spinor components cannot both vanish")
        return cls(complex(up) / norm, complex(down) / norm)


@dataclass(frozen=True)
class SGConfig:
    """Stern-Gerlach run in reduced units.

    Spinors take precedence over phases.  When neither is given the phases
    default to zero, which selects the symmetric spinors with chi = 0.
    """

    alpha: float = 0.5
    k_y: float = 10.0
    y_s: float = 10.0
    y_i: float = -10.0
    z0: float | None = None
    chi_i: float | None = None
    chi_f: float | None = None
    pre_spinor: SpinorAmplitudes | None = None
    post_spinor: SpinorAmplitudes | None = None

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError("alpha must be positive (zero switches the field off)")
        if not self.k_y > 0:
            raise ValueError("k_y must be positive")
        if not self.y_s > 0:
            raise ValueError("y_s must be positive")
        if self.z0 is None:
            object.__setattr__(self, "z0", self.alpha * self.y_s / self.k_y)
        for side in ("i", "f"):
            spinor_name = "pre_spinor" if side == "i" else "post_spinor"
            chi_name = f"chi_{side}"
            spinor, chi = getattr(self, spinor_name), getattr(self, chi_name)
            if spinor is not None:
                if chi is not None:
                    warnings.warn(
                        f"{spinor_name} given explicitly; ignoring {chi_name}", stacklevel=3
                    )
                    object.__setattr__(self, chi_name, None)
            else:
                chi = 0.0 if chi is None else float(chi)
                object.__setattr__(self, chi_name, chi)
                object.__setattr__(self, spinor_name, SpinorAmplitudes.from_phase(chi))

    @property
    def symmetric(self):
        """True when both spinors came from the phase parameterisation."""
        return self.chi_i is not None and self.chi_f is not None


@dataclass(frozen=True)
class PhysicalSGParams:
    mass: float
    field_gradient: float
    interaction_strength: float
    field_length: float
    packet_width: float
    wavenumber: float
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("mass", "field_length", "packet_width", "wavenumber", "hbar"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.field_gradient < 0 or self.interaction_strength < 0:
            raise ValueError("field_gradient and interaction_strength must be non-negative")


@dataclass(frozen=True)
class ReducedUnits:
    alpha: float
    k_y: float
    field_length: float
    interaction_time: float
    time_unit: float


def reduce_units(p):
    """Collapse the physical Stern-Gerlach parameters into reduced ones.

    Lengths are measured in the packet width d and times in M d^2 / hbar.
    """
    tau = p.mass * p.field_length / (p.hbar * p.wavenumber)
    alpha = tau * p.interaction_strength * p.field_gradient * p.packet_width / p.hbar
    return ReducedUnits(
        alpha=alpha,
        k_y=p.wavenumber * p.packet_width,
        field_length=p.field_length / p.packet_width,
        interaction_time=tau,
        time_unit=p.mass * p.packet_width**2 / p.hbar,
    )
