"""Material parameters, boundary configuration and the induced space selection."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import ConfigError, UnsupportedConfig


@dataclass(frozen=True)
class BiotParameters:
    """Spatially constant material constants and the final time."""

    mu: float
    lam: float
    alpha: float
    sigma: float
    kappa: float
    T: float = 1.0

    def __post_init__(self):
        for name in ("mu", "lam", "alpha", "kappa", "T"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)!r}")
        if not self.sigma >= 0:
            raise ConfigError(f"sigma must be nonnegative, got {self.sigma!r}")

    def with_(self, **changes) -> "BiotParameters":
        return replace(self, **changes)


@dataclass(frozen=True)
class BoundaryConfig:
    """Which boundary tags carry essential / natural conditions for u and p."""

    u_essential: frozenset = field(default_factory=frozenset)
    u_natural: frozenset = field(default_factory=frozenset)
    p_essential: frozenset = field(default_factory=frozenset)
    p_natural: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        for name in ("u_essential", "u_natural", "p_essential", "p_natural"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        if self.u_essential & self.u_natural:
            raise ConfigError("u_essential and u_natural overlap")
        if self.p_essential & self.p_natural:
            raise ConfigError("p_essential and p_natural overlap")
        if (self.u_essential | self.u_natural) != (self.p_essential | self.p_natural):
            raise ConfigError("u and p conditions must cover the same boundary")

    @property
    def boundary(self) -> frozenset:
        return self.u_essential | self.u_natural

    def check_mesh(self, tags) -> None:
        """Raise unless the tags cover exactly the boundary tags of a mesh."""
        tags = frozenset(tags)
        if tags != self.boundary:
            raise ConfigError(
                f"boundary tags {sorted(self.boundary)} do not match mesh tags {sorted(tags)}"
            )


@dataclass(frozen=True)
class SpaceSelection:
    u_meanfree: bool
    d_meanfree: bool
    p_meanfree: bool
    pbar_meanfree: bool
    pbar_subset_d: bool


def select_spaces(config: BoundaryConfig, sigma: float) -> SpaceSelection:
    """Apply the case analysis defining the displacement, pressure,
    total-pressure and fluid-content spaces."""
    if not config.u_essential:
        raise UnsupportedConfig(
            "natural displacement conditions on the whole boundary require the "
            "rigid-motion quotient, which is not supported"
        )
    u_clamped_everywhere = not config.u_natural
    p_natural_everywhere = not config.p_essential
    d_meanfree = u_clamped_everywhere
    pbar_meanfree = p_natural_everywhere or (u_clamped_everywhere and sigma == 0)
    p_meanfree = p_natural_everywhere or (u_clamped_everywhere and sigma == 0)
    return SpaceSelection(
        u_meanfree=False,
        d_meanfree=d_meanfree,
        p_meanfree=p_meanfree,
        pbar_meanfree=pbar_meanfree,
        # L2_0 sits inside both L2_0 and L2; L2 only inside L2
        pbar_subset_d=pbar_meanfree or not d_meanfree,
    )


def gamma(params: BiotParameters, sel: SpaceSelection) -> float:
    """Weight of the fluid-content residual in the trial norm."""
    elastic = (params.mu + params.lam) / params.alpha**2
    if params.sigma == 0:
        return elastic
    if sel.pbar_subset_d:
        return min(elastic, 1.0 / params.sigma)
    return elastic + 1.0 / params.sigma


TERZAGHI_CONFIG = BoundaryConfig(
    u_essential={"bottom"}, u_natural={"top"}, p_essential={"top"}, p_natural={"bottom"}
)

CANTILEVER_CONFIG = BoundaryConfig(
    u_essential={"left"},
    u_natural={"top", "right", "bottom"},
    p_essential=set(),
    p_natural={"left", "top", "right", "bottom"},
)

TERZAGHI_PARAMS = BiotParameters(mu=41667.0, lam=27778.0, alpha=1.0, sigma=0.1, kappa=1e-6, T=1.0)
CANTILEVER_PARAMS = BiotParameters(
    mu=3571.4, lam=14286.0, alpha=0.93, sigma=0.0, kappa=1e-7, T=0.005
)
