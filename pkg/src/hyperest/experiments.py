"""Benchmark studies: refinement levels, EOC tables, CSV artifacts.

A study runs one problem over a ladder of simultaneous (h, tau) halvings.
Each level evolves the DG solution, reconstructs it in time and space,
integrates the space-time residual, extracts entropy constants from the
sampled reconstruction range, and assembles the error bound at the requested
checkpoint times. Levels are independent and may run in a thread pool capped
by the HYPEREST_THREADS environment variable.

Initialization: plain L2 projection of the initial data excites mesh-scale
components that the flux has not yet equilibrated; their decay adds an
O(h^{q+1/2}) start-up contribution to the space-time residual norm. Studies
therefore support a settle phase of `settle_steps` coarse-level steps
(scaled 2^level) before t = 0. For linear advection the default settle time
is exactly one periodic traversal, so the settled state still approximates
the stated initial condition and all exact-solution comparisons are
unchanged; for Euler the settle shifts the time origin consistently for the
run and its refined reference.
"""

import concurrent.futures as cf
import math
import os
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .dg import DGSpace, FluxSpec, FLUX_KINDS
from .errors import ConfigError, HyperestError
from .estimator import (EstimatorReport, builtin_entropy, default_box,
                        entropy_constants, error_estimate)
from .mesh import build_mesh
from .quadrature import gauss_rule, legendre_table
from .recon import ReconSpec, reconstruct
from .spacetime import SpaceTimeRecon
from .steppers import StepperSpec, evolve
from .systems import advection, burgers, euler, euler_conservative

__all__ = ["RunConfig", "LevelResult", "RunReport", "EocRow", "eoc",
           "exact_advection", "run_study", "run_level", "euler_reference",
           "project_to_coarse", "report_to_csv", "report_from_csv",
           "ode_study", "default_stepper", "default_recon"]

CSV_HEADER = ("level,h,tau,q,flux,error_l2,residual_l2,recon_gap,"
              "estimator_bound,eoc_error,eoc_residual,in_box")


# ---------------------------------------------------------------------------
# configuration

_DEFAULT_STEPPERS = {1: "rk1", 2: "rk2_heun", 3: "rk3_ssp", 4: "rk4_classic"}


def default_stepper(q):
    """Time integrator of order min(q+1, 4) to match the spatial rate."""
    return _DEFAULT_STEPPERS[min(q + 1, 4)]


def default_recon(order):
    return ReconSpec.for_order(min(order, 5))


def parse_recon(text):
    """Parse 'H(p,d,r)' or 'H(p,d,r):mode' into a ReconSpec."""
    text = text.strip()
    mode = "none"
    if ":" in text:
        text, mode = text.split(":", 1)
    if not (text.startswith("H(") and text.endswith(")")):
        raise ConfigError(f"cannot parse reconstruction {text!r}")
    try:
        p, d, r = (int(v) for v in text[2:-1].split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse reconstruction {text!r}") from exc
    if d >= 1 and mode == "none":
        mode = "backward_fd"
    return ReconSpec(p, d, r, derivative_mode=mode)


@dataclass
class RunConfig:
    """A refinement study: problem, discretization and refinement ladder."""

    problem: str = "advection"
    speed: float = 8.0
    gamma: float = 1.4
    ic: str = ""
    domain: tuple = (0.0, 2.0)
    t_end: float = 0.4
    q: int = 1
    stepper: str = ""              # empty: matched to q
    recon: str = ""                # empty: matched to the stepper order
    flux: str = "richtmyer_visc"
    mu: float = 0.5
    flux_lambda: float = -1.0      # <0: tau/h (central kinds), half max speed (llf)
    levels: int = 5
    cells0: int = 16
    tau0: float = 0.002
    checkpoints: tuple = ()
    cfl_cap: float = 0.13
    settle_steps: int = -1         # <0: problem default
    reference_factor: int = 4
    reference_levels: Optional[tuple] = None   # None: measure at every level
    box_resolution: int = 9
    box: Optional[tuple] = None    # ((lo...), (hi...)) explicit compact box
    force: bool = False
    threads: int = 0

    def __post_init__(self):
        if self.problem not in ("advection", "burgers", "euler"):
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.flux not in FLUX_KINDS:
            raise ConfigError(f"unknown flux {self.flux!r}")
        if not self.ic:
            self.ic = {"advection": "cos_wave", "burgers": "sin_bump",
                       "euler": "pressure_wave"}[self.problem]
        if not self.stepper:
            self.stepper = default_stepper(self.q)
        if not self.checkpoints:
            self.checkpoints = (0.6, 0.8, 1.0) if self.problem == "euler" \
                else (self.t_end,)
        self.checkpoints = tuple(float(c) for c in self.checkpoints)
        if self.settle_steps < 0:
            self.settle_steps = self._default_settle()
        self.validate()

    def _default_settle(self):
        if self.problem == "advection":
            a, b = self.domain
            n = (b - a) / (abs(self.speed) * self.tau0)
            if abs(n - round(n)) < 1e-9 and round(n) > 0:
                return int(round(n))
            return 0
        if self.problem == "euler":
            return 8
        return 0

    def validate(self):
        h0 = (self.domain[1] - self.domain[0]) / self.cells0
        if self.tau0 / h0 > self.cfl_cap + 1e-12:
            raise ConfigError(
                f"tau0/h0 = {self.tau0 / h0:.4g} exceeds the CFL cap {self.cfl_cap}")
        if self.levels < 1 or self.cells0 < 2:
            raise ConfigError("need levels >= 1 and cells0 >= 2")
        if self.q < 0:
            raise ConfigError("polynomial degree must be nonnegative")
        try:
            StepperSpec(self.stepper)
            self.recon_spec()
        except (ValueError, HyperestError) as exc:
            raise ConfigError(str(exc)) from exc
        for c in self.checkpoints:
            n = c / self.tau0
            if c <= 0 or c > self.t_end + 1e-12 or abs(n - round(n)) > 1e-9:
                raise ConfigError(
                    f"checkpoint {c} must be a positive multiple of tau0 within t_end")
        n_end = self.t_end / self.tau0
        if abs(n_end - round(n_end)) > 1e-9:
            raise ConfigError("t_end must be a multiple of tau0")

    def recon_spec(self):
        if self.recon:
            return parse_recon(self.recon)
        return default_recon(StepperSpec(self.stepper).order)

    def system(self):
        if self.problem == "advection":
            return advection(self.speed)
        if self.problem == "burgers":
            return burgers()
        return euler(self.gamma)

    def initial_condition(self) -> Callable:
        if self.problem == "euler":
            if self.ic != "pressure_wave":
                raise ConfigError(f"unknown euler initial condition {self.ic!r}")
            gamma = self.gamma

            def u0(x):
                rho = np.ones_like(x)
                p = 1.3 + 0.5 * np.sin(np.pi * x)
                return euler_conservative(rho, 1.0, p, gamma)

            return u0
        if self.ic == "cos_wave":
            return lambda x: 1.0 - 0.5 * np.cos(np.pi * x)
        if self.ic == "sin_bump":
            return lambda x: 0.5 + np.sin(np.pi * x)
        raise ConfigError(f"unknown initial condition {self.ic!r}")

    def flux_spec(self, tau, h):
        lam = self.flux_lambda
        if lam < 0:
            if self.flux == "llf":
                lam = self._half_max_speed()
            else:
                lam = tau / h
        return FluxSpec(self.flux, lam=lam, mu=self.mu,
                        nu=1 if self.flux == "richtmyer_visc" else 0)

    def _half_max_speed(self):
        sys = self.system()
        xs = np.linspace(self.domain[0], self.domain[1], 257)
        u0 = np.asarray(self.initial_condition()(xs))
        if u0.ndim == 1:
            u0 = u0[:, None]
        return 0.5 * float(np.max(sys.max_speed(u0)))


def exact_advection(u0: Callable, speed, domain, t, x):
    """Exact transported solution u0((x - speed t) wrapped into the domain)."""
    a, b = domain
    length = b - a
    shifted = a + np.mod(np.asarray(x, dtype=float) - speed * t - a, length)
    return u0(shifted)


# ---------------------------------------------------------------------------
# EOC helper


@dataclass(frozen=True)
class EocRow:
    level: int
    h: float
    value: float
    eoc: float         # nan on the first row or for nonpositive values


def eoc(values):
    """EOC rows from a sequence of (h, value) pairs under refinement."""
    rows = []
    prev = None
    for lvl, (h, v) in enumerate(values):
        rate = math.nan
        if prev is not None:
            h0, v0 = prev
            if v0 > 0 and v > 0 and h0 != h:
                rate = math.log(v0 / v) / math.log(h0 / h)
        rows.append(EocRow(level=lvl, h=float(h), value=float(v), eoc=rate))
        prev = (h, v)
    return rows


# ---------------------------------------------------------------------------
# level pipeline


@dataclass
class LevelResult:
    level: int
    cells: int
    h: float
    tau: float
    error_l2: float = math.nan           # at the final checkpoint
    residual_l2: float = math.nan
    recon_gap: float = math.nan
    bound: float = math.nan
    in_box: bool = True
    errors: tuple = ()                    # per checkpoint
    reports: tuple = ()                   # EstimatorReport per checkpoint
    supdx_max: float = math.nan
    failed: Optional[str] = None


def project_to_coarse(coarse: DGSpace, fine: DGSpace, fine_coeffs):
    """L2-project a DG function on a nested finer mesh onto a coarse space."""
    ratio = fine.num_cells // coarse.num_cells
    if coarse.num_cells * ratio != fine.num_cells:
        raise ValueError("meshes are not nested")
    rule = gauss_rule(min(fine.q + coarse.q // 2 + 2, 20))
    Pf, _ = legendre_table(fine.q, rule.points)
    fine_vals = fine.cell_values(fine_coeffs, Pf)          # (Mf, m, G)
    out = np.zeros((coarse.num_cells, coarse.m, coarse.q + 1))
    for s in range(ratio):
        xi_c = (2.0 * s + 1.0 + rule.points) / ratio - 1.0
        Pc, _ = legendre_table(coarse.q, xi_c)
        sub = fine_vals[s::ratio]
        w = rule.weights * 0.5 * fine.mesh.cell_widths[s::ratio][:, None]
        out += np.einsum("img,ig,kg->imk", sub, w, Pc)
    return out * coarse.scale[:, None, :]


def _evolve_level(config: RunConfig, level, q, cells, tau, stepper, settle_steps):
    sys = config.system()
    mesh = build_mesh(config.domain, cells)
    space = DGSpace(mesh, q, sys.m)
    spec = config.flux_spec(tau, mesh.h)
    coeffs = space.project(config.initial_condition())

    def rhs(t, c):
        return -space.operator(sys, spec, c, t=t)

    sspec = StepperSpec(stepper)
    if settle_steps > 0:
        pre = evolve(rhs, coeffs, np.arange(settle_steps + 1) * tau, sspec)
        coeffs = pre.states[-1]
    n_steps = int(round(config.t_end / tau))
    traj = evolve(rhs, coeffs, np.arange(n_steps + 1) * tau, sspec)
    return sys, space, spec, rhs, traj


def euler_reference(config: RunConfig, level):
    """Refined companion run for error measurement: reference_factor times
    finer in h and tau, one degree higher, identical settle duration.
    Returns the coarse-projected states at the checkpoints.

    Degrees >= 4 need a smaller Courant number than the base run uses, so
    the reference time step is refined by an extra factor 2 there.
    """
    f = config.reference_factor
    cells = config.cells0 * 2**level * f
    q_ref = config.q + 1
    extra = 2 if q_ref >= 4 else 1
    tau = config.tau0 / 2**level / (f * extra)
    stepper = default_stepper(q_ref)
    settle = config.settle_steps * 2**level * f * extra
    sys, space, spec, rhs, traj = _evolve_level(
        config, level, q_ref, cells, tau, stepper, settle)
    coarse = DGSpace(build_mesh(config.domain, config.cells0 * 2**level),
                     config.q, sys.m)
    out = []
    for c in config.checkpoints:
        n = int(round(c / tau))
        out.append(project_to_coarse(coarse, space, traj.states[n]))
    return out


def run_level(config: RunConfig, level) -> LevelResult:
    cells = config.cells0 * 2**level
    tau = config.tau0 / 2**level
    mesh_h = (config.domain[1] - config.domain[0]) / cells
    result = LevelResult(level=level, cells=cells, h=mesh_h, tau=tau)
    try:
        return _run_level_inner(config, level, result)
    except HyperestError as exc:
        result.failed = str(exc)
        return result


def _pick_box(config, sys, sweep):
    """Padded componentwise box around the reconstruction samples, with the
    padding backed off until the sampled state grid stays admissible.
    Returns None when even the unpadded hull box leaves the state space
    (then no componentwise box can certify the bounded-reconstruction
    assumption and the bound degrades to infinity)."""
    for pad in (0.1, 0.05, 0.02, 0.0):
        box = default_box(sweep.sample_min, sweep.sample_max, pad=pad)
        if sys.admissible is None or bool(np.all(sys.admissible(
                box.sample_grid(config.box_resolution)))):
            return box
    return None


def _run_level_inner(config, level, result):
    sys, space, spec, rhs, traj = _evolve_level(
        config, level, config.q, result.cells, result.tau,
        config.stepper, config.settle_steps * 2**level)
    rspec = config.recon_spec()
    recon = reconstruct(traj, rspec, rhs=rhs)
    strec = SpaceTimeRecon(space, sys, spec, recon)
    fld = strec.residual_field()
    sweep = fld.sweep()

    pair = builtin_entropy(sys)
    if config.box is not None:
        from .estimator import CompactBox, verify_in_box
        box = CompactBox(np.asarray(config.box[0], dtype=float),
                         np.asarray(config.box[1], dtype=float))
        in_box, _ = verify_in_box(fld, box)
    else:
        box = _pick_box(config, sys, sweep)
        in_box = True
    consts = None
    if box is not None:
        consts = entropy_constants(pair, sys, box,
                                   resolution=config.box_resolution)

    u0 = config.initial_condition()
    init_f = strec.at_time(0.0)
    init_sq = strec.space_up.error_l2(init_f.coeffs, u0) ** 2

    rows = []
    gaps = []
    for c in config.checkpoints:
        n = int(round(c / result.tau))
        gap_sq = strec.recon_gap_sq(c, traj.states[n])
        gaps.append(math.sqrt(gap_sq))
        rows.append((c, gap_sq, sweep.residual_sq_until(traj.times, c),
                     sweep.supdx_integral_until(traj.times, c)))
    if consts is not None:
        reports = error_estimate(consts, rows, init_sq, in_box=in_box,
                                 force=config.force)
    else:
        reports = [EstimatorReport(t=c, recon_gap_sq=g, residual_sq=r,
                                   init_sq=init_sq, exp_factor=math.inf,
                                   bound=math.inf, supdx_integral=s,
                                   in_box=in_box)
                   for (c, g, r, s) in rows]

    errors = []
    if config.problem == "advection":
        for c in config.checkpoints:
            n = int(round(c / result.tau))
            exact = lambda x, c=c: exact_advection(u0, config.speed,
                                                   config.domain, c, x)
            errors.append(space.error_l2(traj.states[n], exact))
    elif config.problem == "euler" and (config.reference_levels is None
                                        or level in config.reference_levels):
        refs = euler_reference(config, level)
        for ref, c in zip(refs, config.checkpoints):
            n = int(round(c / result.tau))
            errors.append(float(np.linalg.norm(traj.states[n] - ref)))
    else:
        errors = [math.nan] * len(config.checkpoints)

    result.errors = tuple(errors)
    result.reports = tuple(reports)
    result.error_l2 = errors[-1]
    result.residual_l2 = math.sqrt(rows[-1][2])
    result.recon_gap = gaps[-1]
    result.bound = reports[-1].bound
    result.in_box = in_box
    result.supdx_max = float(np.max(sweep.slab_supdx))
    return result


# ---------------------------------------------------------------------------
# study driver and CSV


@dataclass
class RunReport:
    config: RunConfig
    levels: list

    def eoc_error(self):
        return eoc([(lv.h, lv.error_l2) for lv in self.levels])

    def eoc_residual(self):
        return eoc([(lv.h, lv.residual_l2) for lv in self.levels])


def _worker_count(config):
    workers = config.threads if config.threads > 0 else (os.cpu_count() or 1)
    env = os.environ.get("HYPEREST_THREADS")
    if env:
        try:
            workers = min(workers, max(1, int(env)))
        except ValueError:
            pass
    return max(1, min(workers, config.levels))


def run_study(config: RunConfig) -> RunReport:
    """Run every refinement level and assemble the report (levels execute
    independently; failures are recorded per level and do not abort)."""
    workers = _worker_count(config)
    if workers > 1:
        with cf.ThreadPoolExecutor(max_workers=workers) as pool:
            levels = list(pool.map(lambda k: run_level(config, k),
                                   range(config.levels)))
    else:
        levels = [run_level(config, k) for k in range(config.levels)]
    return RunReport(config=config, levels=levels)


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def report_to_csv(report: RunReport) -> str:
    rows = [CSV_HEADER]
    e_rows = report.eoc_error()
    r_rows = report.eoc_residual()
    for lv, er, rr in zip(report.levels, e_rows, r_rows):
        rows.append(",".join([
            str(lv.level), _fmt(lv.h), _fmt(lv.tau), str(report.config.q),
            report.config.flux, _fmt(lv.error_l2), _fmt(lv.residual_l2),
            _fmt(lv.recon_gap), _fmt(lv.bound), _fmt(er.eoc), _fmt(rr.eoc),
            "true" if lv.in_box else "false",
        ]))
    return "\n".join(rows) + "\n"


def report_from_csv(text: str):
    """Parse rows written by report_to_csv back into plain records."""
    lines = [ln for ln in text.strip().splitlines() if ln]
    if lines[0] != CSV_HEADER:
        raise ValueError("unrecognized CSV header")
    out = []
    for ln in lines[1:]:
        parts = ln.split(",")
        out.append({
            "level": int(parts[0]), "h": float(parts[1]), "tau": float(parts[2]),
            "q": int(parts[3]), "flux": parts[4], "error_l2": float(parts[5]),
            "residual_l2": float(parts[6]), "recon_gap": float(parts[7]),
            "estimator_bound": float(parts[8]), "eoc_error": float(parts[9]),
            "eoc_residual": float(parts[10]), "in_box": parts[11] == "true",
        })
    return out


def write_plot_data(report: RunReport, stem):
    """Two-column (h, value) files per curve, for external plotting tools."""
    paths = []
    for name, rows in (("error", report.eoc_error()),
                       ("residual", report.eoc_residual())):
        path = f"{stem}__{name}.dat"
        with open(path, "w") as fh:
            for row in rows:
                fh.write(f"{row.h:.17g} {row.value:.17g}\n")
        paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# scalar ODE residual studies


ODE_PROBLEMS = {
    "decay": {
        "rhs": lambda t, u: -u,
        "u0": np.array([1.0]),
        "exact": lambda t: np.exp(-t),
        "lipschitz": 1.0,
    },
    "stiffish": {
        "rhs": lambda t, u: -u**3 + np.sin(t),
        "u0": np.array([1.0]),
        "exact": None,
        "lipschitz": 5.0,
    },
}


def ode_study(problem="decay", pairings=None, t_end=1.0, n0=10, halvings=5):
    """Sup-norm residual EOC table for stepper/reconstruction pairings, plus
    the a posteriori bound check against the measured error when an exact
    solution (or high-accuracy reference) is available."""
    from .recon import residual_norms, ode_error_bound

    prob = ODE_PROBLEMS[problem]
    if pairings is None:
        pairings = [("rk3_ssp", ReconSpec(0, 0, 0)),
                    ("rk4_classic", ReconSpec(1, 0, 0)),
                    ("rk4_classic", ReconSpec(0, 1, 0, "directional")),
                    ("rk4_classic", ReconSpec(0, 1, 0, "backward_fd"))]
    rhs = prob["rhs"]
    results = []
    for family, rspec in pairings:
        sups, bounds_ok = [], []
        for lvl in range(halvings + 1):
            n = n0 * 2**lvl
            grid = np.linspace(0.0, t_end, n + 1)
            traj = evolve(rhs, prob["u0"], grid, StepperSpec(family))
            recon = reconstruct(traj, rspec, rhs=rhs)
            sup, l1, l2 = residual_norms(recon, rhs, sign="ode")
            sups.append(sup)
            exact = prob["exact"]
            if exact is not None:
                ts = np.linspace(0.0, t_end, 401)
                err = max(float(np.max(np.abs(recon(t) - exact(t)))) for t in ts)
                rep = ode_error_bound(l1, l2, prob["lipschitz"], t_end,
                                      initial_error=float(
                                          np.abs(recon(0.0) - exact(0.0))[0]))
                bounds_ok.append(err <= rep.bound_linf)
        eocs = [math.log2(sups[i - 1] / sups[i]) for i in range(1, len(sups))]
        results.append({"family": family, "recon": str(rspec),
                        "mode": rspec.derivative_mode, "sup_norms": sups,
                        "eocs": eocs, "order": StepperSpec(family).order,
                        "bounds_ok": all(bounds_ok) if bounds_ok else None})
    return results
