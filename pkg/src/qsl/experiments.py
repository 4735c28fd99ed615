"""Experiment runners: scenario execution with CSV/JSON emission, the qubit
saturation experiment, the erasure comparison, the joint system-environment
energy-variance driver, and the random invariant sweep.

All output files are byte-deterministic for a fixed seed: floats are written
with shortest round-trip repr, JSON keys are sorted, and nothing timestamps.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Optional

import numpy as np

from .bounds import (energy_variance_check, entropy_rate_bound, heat_flux_bound,
                     speed_report, split_observable)
from .control import erasure_scenario
from .dynamics import Generator, TrajectoryPoint, evolve, split_derivative
from .errors import BoundViolationError, ContractError
from .geometry import integrated_report
from .information import (classical_fisher_povm, speed_operators,
                          support_correction)
from .operators import (DensityMatrix, HermitianOperator, SIGMA_Y, SIGMA_Z,
                        SpectralFrame, sym_covariance, variance)
from .sampling import (random_density, random_hermitian, random_instance,
                       random_povm)
from .scenario import ScenarioConfig
from .tolerances import DEFAULT_TOL, ToleranceSet

SPEED_CSV_COLUMNS = (
    "t", "observable", "a_dot", "a_dot_coh", "a_dot_inc", "dA", "dA_coh",
    "dA_inc", "F", "F_coh", "F_inc", "bound_cr", "bound_coh", "bound_inc",
    "bound_upper", "bound_lower", "ratio", "tau_a", "tau_coh", "tau_inc",
    "support_corr")
ERASURE_CSV_COLUMNS = ("t", "z_inc", "x_inc", "z_enh", "x_enh", "rate_inc", "rate_enh")
ENTROPY_CSV_COLUMNS = ("t", "entropy", "entropy_rate", "entropy_std", "bound", "cap")


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    v = float(x)
    if not math.isfinite(v):
        return ""  # missing-value convention (infinite timescales etc.)
    return repr(v)


def _write_csv(path: Path, columns, rows) -> None:
    lines = [",".join(columns)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def _jsonable(obj):
    import numpy as _np
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (_np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (_np.integer,)):
        return int(obj)
    if isinstance(obj, _np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def _write_json(path: Path, obj) -> None:
    import json
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _speed_row(t, name, split, ops, rep):
    return (t, name, rep.a_dot, rep.a_dot_coh, rep.a_dot_inc,
            split.std, split.std_coh, split.std_inc,
            ops.fisher, ops.fisher_coh, ops.fisher_inc,
            rep.bound_cr, rep.bound_coh, rep.bound_inc,
            rep.bound_upper, rep.bound_lower, rep.ratio,
            rep.tau_a, rep.tau_coh, rep.tau_inc, rep.support_corr)


def run_scenario(config: ScenarioConfig, out_dir: Path,
                 base_tol: ToleranceSet = DEFAULT_TOL) -> dict[str, Path]:
    """Evolve a configured scenario and emit its report files."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tol = config.tolerances(base_tol)
    rho0 = config.initial_state(tol)
    gen = config.generator()
    observables = config.observable_operators()
    traj = evolve(rho0, gen, config.t_max, config.steps, tol)

    rows = []
    basis_series = {name: {"t": [], "alpha_coh": [], "alpha_inc": [], "residual_speed": []}
                    for name, _ in observables}
    entropy_rows = []
    for pt in traj:
        ops = speed_operators(pt, tol)
        for name, op in observables:
            split = split_observable(op, pt.frame)
            corr = support_correction(pt, op, tol)
            rep = speed_report(split, pt, ops, support_corr=corr, tol=tol)
            rows.append(_speed_row(pt.t, name, split, ops, rep))
            if "basis" in config.outputs:
                rho = pt.rho.matrix
                a_coh = (sym_covariance(rho, op, ops.sld_coh) / ops.fisher_coh
                         if ops.fisher_coh > 1e-12 else 0.0)
                a_inc = (sym_covariance(rho, op, ops.sld_inc) / ops.fisher_inc
                         if ops.fisher_inc > 1e-12 else 0.0)
                resid = abs(rep.a_dot - a_coh * ops.fisher_coh - a_inc * ops.fisher_inc)
                series = basis_series[name]
                series["t"].append(pt.t)
                series["alpha_coh"].append(a_coh)
                series["alpha_inc"].append(a_inc)
                series["residual_speed"].append(resid)
        if "entropy" in config.outputs:
            er = entropy_rate_bound(pt, ops, tol)
            entropy_rows.append((pt.t, er.entropy, er.entropy_rate,
                                 er.entropy_std, er.bound, er.entropy_std_cap))

    written: dict[str, Path] = {}
    speed_path = out_dir / f"{config.name}.speed.csv"
    _write_csv(speed_path, SPEED_CSV_COLUMNS, rows)
    written["speed"] = speed_path

    integrated = {name: integrated_report(traj, op, tol).to_dict()
                  for name, op in observables}
    integrated_path = out_dir / f"{config.name}.integrated.json"
    _write_json(integrated_path, integrated)
    written["integrated"] = integrated_path

    if "entropy" in config.outputs:
        p = out_dir / f"{config.name}.entropy.csv"
        _write_csv(p, ENTROPY_CSV_COLUMNS, entropy_rows)
        written["entropy"] = p
    if "basis" in config.outputs:
        p = out_dir / f"{config.name}.basis.json"
        _write_json(p, basis_series)
        written["basis"] = p
    return written


def dephasing_channel(kappa: float, axis: np.ndarray = SIGMA_Z) -> tuple[float, np.ndarray]:
    """Dephasing at rate kappa along an axis, i.e. the double commutator
    -kappa [axis, [axis, rho]], as a jump channel (rate 2*kappa, axis)."""
    return (2.0 * kappa, axis)


def fig2_experiment(omega: float = 1.0, kappa: float = 0.1, init: str = "z1",
                    t_max: float = 10.0, steps: int = 4000,
                    out_dir: Path = Path("."),
                    tol: ToleranceSet = DEFAULT_TOL) -> tuple[dict[str, Path], dict]:
    """Driven-dephased qubit: speeds and bounds for sigma_x and sigma_z.

    H = (omega/2) sigma_y with sigma_z dephasing at rate kappa. "z1" starts at
    Bloch (0,0,1) (dynamics stays in the y=0 plane, where the bounds saturate
    by sign pattern); "diag" starts at (1,1,1)/sqrt(3) where they do not.
    The saturation summary records, per observable, the largest gaps of the
    upper and lower bounds overall and restricted by the sign pattern of the
    speed-operator coefficients.
    """
    if omega < 0 or kappa < 0:
        raise ContractError("rates must be nonnegative")
    if init == "z1":
        bloch = (0.0, 0.0, 1.0)
    elif init == "diag":
        s = 1.0 / math.sqrt(3.0)
        bloch = (s, s, s)
    else:
        raise ContractError(f"init must be 'z1' or 'diag', got {init!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = f"fig2_{init}"
    rho0 = DensityMatrix.from_bloch(*bloch)
    channels = [dephasing_channel(kappa)] if kappa > 0 else []
    gen = Generator((omega / 2) * SIGMA_Y, channels, dim=2)
    traj = evolve(rho0, gen, t_max, steps, tol)

    observables = [("sx", HermitianOperator(np.array([[0, 1], [1, 0]], complex))),
                   ("sz", HermitianOperator(SIGMA_Z))]
    rows = []
    stats = {obs: {"max_gap_upper": 0.0, "max_gap_lower": 0.0, "max_gap_cr": 0.0,
                   "max_gap_upper_same_sign": 0.0, "max_gap_lower_diff_sign": 0.0,
                   "n_same_sign": 0, "n_diff_sign": 0, "n_unclassified": 0}
             for obs, _ in observables}
    for pt in traj:
        ops = speed_operators(pt, tol)
        for obs, op in observables:
            split = split_observable(op, pt.frame)
            corr = support_correction(pt, op, tol)
            rep = speed_report(split, pt, ops, support_corr=corr, tol=tol)
            rows.append(_speed_row(pt.t, obs, split, ops, rep))
            gap_u = rep.bound_upper - abs(rep.a_dot)
            gap_l = abs(rep.a_dot) - rep.bound_lower
            gap_cr = rep.bound_cr - abs(rep.a_dot)
            st = stats[obs]
            st["max_gap_upper"] = max(st["max_gap_upper"], gap_u)
            st["max_gap_lower"] = max(st["max_gap_lower"], gap_l)
            st["max_gap_cr"] = max(st["max_gap_cr"], gap_cr)
            rho = pt.rho.matrix
            contrib_coh = (sym_covariance(rho, op, ops.sld_coh)
                           if ops.fisher_coh > 1e-12 else 0.0)
            contrib_inc = (sym_covariance(rho, op, ops.sld_inc)
                           if ops.fisher_inc > 1e-12 else 0.0)
            if abs(contrib_coh) > 1e-10 and abs(contrib_inc) > 1e-10:
                if contrib_coh * contrib_inc > 0:
                    st["n_same_sign"] += 1
                    st["max_gap_upper_same_sign"] = max(
                        st["max_gap_upper_same_sign"], gap_u)
                else:
                    st["n_diff_sign"] += 1
                    st["max_gap_lower_diff_sign"] = max(
                        st["max_gap_lower_diff_sign"], gap_l)
            else:
                st["n_unclassified"] += 1

    speed_path = out_dir / f"{name}.speed.csv"
    _write_csv(speed_path, SPEED_CSV_COLUMNS, rows)
    summary = {"omega": omega, "kappa": kappa, "init": init, "t_max": t_max,
               "steps": steps, "observables": stats}
    summary_path = out_dir / f"{name}.saturation.json"
    _write_json(summary_path, summary)
    return {"speed": speed_path, "saturation": summary_path}, summary


def erasure_experiment(a: float, b: float, gamma: float, epsilon: float,
                       t_max: float, steps: int, out_dir: Path = Path("."),
                       tol: ToleranceSet = DEFAULT_TOL) -> tuple[dict[str, Path], dict]:
    """Run the erasure comparison and emit its CSV record."""
    result = erasure_scenario(a, b, gamma, epsilon, t_max, steps, tol)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "erasure.csv"
    _write_csv(path, ERASURE_CSV_COLUMNS, result.rows())
    summary = {
        "gamma": gamma, "epsilon": epsilon,
        "crossing_index": result.crossing_index,
        "max_abs_z_excess": float(np.max(np.abs(result.z_enh) - np.abs(result.z_inc))),
        "final_z_inc": float(result.z_inc[-1]),
        "final_z_enh": float(result.z_enh[-1]),
    }
    _write_json(out_dir / "erasure.summary.json", summary)
    return {"csv": path, "summary": out_dir / "erasure.summary.json"}, summary


def envcheck_experiment(seed: int = 0, scenarios: int = 200, instants: int = 100,
                        t_max: float = 1.0, out_dir: Optional[Path] = None,
                        tol: ToleranceSet = DEFAULT_TOL) -> dict:
    """Random two-qubit joint-unitary scenarios checked against energy variances.

    Asserted claims follow the literal reduced-variance form; the summary also
    carries the two rigorous variants (effective-Hamiltonian variance and the
    joint variance of H_sys + H_int) so the gap between them is visible.
    """
    rng = np.random.default_rng(seed)
    viol_sys = viol_inc = viol_strict = 0
    worst_sys = -math.inf
    worst_eff = -math.inf
    worst_sys_int = -math.inf
    worst_inc = -math.inf
    checked = 0
    for _ in range(scenarios):
        h_s = random_hermitian(rng, 2)
        h_e = random_hermitian(rng, 2)
        h_i = random_hermitian(rng, 4)
        h_total = (np.kron(h_s.matrix, np.eye(2)) + np.kron(np.eye(2), h_e.matrix)
                   + h_i.matrix)
        rho = DensityMatrix(np.kron(random_density(rng, 2).matrix,
                                    random_density(rng, 2).matrix))
        joint = evolve(rho, Generator(h_total, (), dim=4), t_max, instants, tol)
        for pt in joint.points[1:]:
            checked += 1
            try:
                rep = energy_variance_check(pt, h_s, h_i, tol=tol)
            except BoundViolationError as exc:
                rep = exc.report
            if not rep.ok_coh_sys:
                viol_sys += 1
            if not rep.ok_inc:
                viol_inc += 1
            if not rep.ok_inc_strict:
                viol_strict += 1
            worst_sys = max(worst_sys, rep.fisher_coh - rep.bound_sys)
            if rep.bound_eff is not None:
                worst_eff = max(worst_eff, rep.fisher_coh - rep.bound_eff)
            worst_sys_int = max(worst_sys_int, rep.fisher_coh - rep.bound_sys_int)
            worst_inc = max(worst_inc, rep.fisher_inc - rep.bound_int)
    summary = {
        "seed": seed, "scenarios": scenarios, "instants": instants,
        "checked": checked,
        "violations_coh_vs_sys_variance": viol_sys,
        "violations_inc_vs_int_variance": viol_inc,
        "violations_inc_strictness": viol_strict,
        "worst_gap_coh_vs_sys_variance": worst_sys,
        "worst_gap_coh_vs_effective_variance": worst_eff,
        "worst_gap_coh_vs_joint_sys_int_variance": worst_sys_int,
        "worst_gap_inc_vs_int_variance": worst_inc,
        "pass_literal": viol_sys == 0 and viol_inc == 0 and viol_strict == 0,
        "pass_rigorous": worst_eff <= 1e-8 and worst_inc <= 1e-8 and viol_strict == 0,
    }
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_json(out_dir / "envcheck.json", summary)
    return summary


class _Violations:
    def __init__(self):
        self.records: dict[str, dict] = {}

    def note(self, name: str, violation: float, tolerance: float):
        rec = self.records.setdefault(
            name, {"max_violation": 0.0, "tolerance": tolerance, "checks": 0})
        rec["checks"] += 1
        v = float(violation)
        if v > rec["max_violation"]:
            rec["max_violation"] = v

    def summary(self) -> dict:
        out = {}
        for name, rec in sorted(self.records.items()):
            out[name] = dict(rec, ok=bool(rec["max_violation"] <= rec["tolerance"]))
        return out


def _ratio_closed_form(split, ops) -> Optional[float]:
    den = split.std_coh * math.sqrt(ops.fisher_coh) + split.std_inc * math.sqrt(ops.fisher_inc)
    if den <= 0:
        return None
    num = split.std_coh * math.sqrt(ops.fisher_inc) - split.std_inc * math.sqrt(ops.fisher_coh)
    return math.sqrt(1.0 + (num / den) ** 2)


def verify_sweep(seed: int = 0, trials: int = 10000,
                 dims: tuple[int, ...] = (2, 3, 4, 5, 6, 7, 8),
                 tol: ToleranceSet = DEFAULT_TOL) -> dict:
    """Evaluate every module invariant on random instances; report max violations."""
    rng = np.random.default_rng(seed)
    acc = _Violations()
    for i in range(trials):
        dim = dims[i % len(dims)]
        inst = random_instance(rng, dim, tol=tol)
        pt, obs = inst.point, inst.observable
        rho = pt.rho.matrix
        frame = pt.frame

        acc.note("spectral_reconstruction",
                 np.max(np.abs(frame.reconstruct() - rho)), 1e-9)
        acc.note("derivative_traceless", abs(np.trace(pt.drho.matrix).real), 1e-11)
        acc.note("split_additivity",
                 np.max(np.abs(pt.coh.matrix + pt.inc.matrix - pt.drho.matrix)), 1e-12)
        acc.note("pdot_sums_to_zero", abs(float(np.sum(pt.pdot))), 1e-10)

        ops = speed_operators(pt, tol)
        l = ops.sld.matrix
        recon = 0.5 * (l @ rho + rho @ l)
        acc.note("sld_reconstruction", np.max(np.abs(recon - pt.drho.matrix)), 1e-9)
        acc.note("sld_zero_mean", max(abs(np.trace(rho @ m.matrix).real)
                                      for m in (ops.sld, ops.sld_coh, ops.sld_inc)), 1e-10)
        acc.note("sld_split_additivity",
                 np.max(np.abs(ops.sld_coh.matrix + ops.sld_inc.matrix - l)), 1e-10)
        acc.note("fisher_additivity",
                 abs(ops.fisher - ops.fisher_coh - ops.fisher_inc) / max(ops.fisher, 1.0),
                 1e-9)
        acc.note("speed_orthogonality",
                 abs(sym_covariance(rho, ops.sld_coh, ops.sld_inc)), 1e-10)
        acc.note("covariance_psd", max(-variance(rho, obs), 0.0), 1e-12)

        split = split_observable(obs, frame)
        acc.note("variance_split",
                 abs(split.std**2 - split.std_coh**2 - split.std_inc**2)
                 / max(split.std**2, 1.0), 1e-9)
        corr = support_correction(pt, obs, tol)
        rep = speed_report(split, pt, ops, support_corr=corr, tol=tol)
        scale = 1.0 + rep.bound_cr
        acc.note("bound_chain", max(
            rep.bound_lower - abs(rep.a_dot),
            abs(rep.a_dot) - rep.bound_upper - rep.support_corr,
            rep.bound_upper - rep.bound_sum,
            rep.bound_sum - rep.bound_cr) / scale, 1e-9)
        acc.note("coherent_speed_bound",
                 (abs(rep.a_dot_coh) - rep.bound_coh) / (1.0 + rep.bound_coh), 1e-9)
        acc.note("incoherent_speed_bound",
                 (abs(rep.a_dot_inc) - rep.bound_inc) / (1.0 + rep.bound_inc), 1e-9)
        closed = _ratio_closed_form(split, ops)
        if closed is not None and math.isfinite(rep.ratio):
            acc.note("ratio_identity", abs(rep.ratio - closed), 1e-10)
            acc.note("ratio_at_least_one", 1.0 - rep.ratio, 1e-12)
        for ti in (rep.ti_a, rep.ti_coh, rep.ti_inc):
            if math.isfinite(ti):
                acc.note("time_information", 1.0 - ti, 1e-9)

        try:
            er = entropy_rate_bound(pt, ops, tol)
        except BoundViolationError as exc:
            er = exc.report
        acc.note("entropy_rate_bound", abs(er.entropy_rate) - er.bound, 1e-9)
        acc.note("entropy_spread_cap", er.entropy_std - er.entropy_std_cap, 1e-12)

        k = i % 5
        if k == 0:
            # frame-gauge independence under random column phases
            phases = np.exp(1j * rng.uniform(0, 2 * np.pi, size=dim))
            frame2 = SpectralFrame(frame.probabilities, frame.basis * phases,
                                   rank_tol=frame.rank_tol)
            coh2, inc2, pdot2 = split_derivative(pt.drho, frame2)
            acc.note("gauge_split", max(
                np.max(np.abs(coh2.matrix - pt.coh.matrix)),
                np.max(np.abs(inc2.matrix - pt.inc.matrix)),
                np.max(np.abs(pdot2 - pt.pdot))), 1e-11)
            pt2 = TrajectoryPoint(t=pt.t, rho=pt.rho, frame=frame2,
                                  drho=pt.drho, coh=coh2, inc=inc2, pdot=pdot2)
            ops2 = speed_operators(pt2, tol)
            acc.note("gauge_fisher", max(
                abs(ops2.fisher - ops.fisher),
                abs(ops2.fisher_coh - ops.fisher_coh),
                abs(ops2.fisher_inc - ops.fisher_inc)), 1e-10)
        elif k == 1:
            eig_povm = [np.outer(frame.basis[:, j], frame.basis[:, j].conj())
                        for j in range(dim)]
            f_pi = classical_fisher_povm(pt, eig_povm, tol)
            acc.note("povm_eigenbasis", abs(f_pi - ops.fisher_inc), 1e-9)
            f_rand = classical_fisher_povm(pt, random_povm(rng, dim, dim + 1), tol)
            acc.note("povm_dominated", f_rand - ops.fisher, 1e-9)
        elif k == 2:
            pure = random_instance(rng, dim, unitary_only=True, pure_state=True, tol=tol)
            h = pure.generator.hamiltonian(0.0)
            target = 4.0 * variance(pure.point.rho.matrix, h)
            popts = speed_operators(pure.point, tol)
            acc.note("pure_state_coherent_fisher",
                     abs(popts.fisher_coh - target) / max(target, 1e-12), 1e-9)
            mixed = random_instance(rng, dim, unitary_only=True, tol=tol)
            h2 = mixed.generator.hamiltonian(0.0)
            mops = speed_operators(mixed.point, tol)
            cap = 4.0 * variance(mixed.point.rho.matrix, h2)
            acc.note("unitary_fisher_energy_cap",
                     (mops.fisher_coh - cap) / (1.0 + cap), 1e-9)
        elif k == 3:
            shift = float(rng.normal())
            obs2 = obs + shift * np.eye(dim)
            split2 = split_observable(obs2, frame)
            rep2 = speed_report(split2, pt, ops, support_corr=corr, tol=tol)
            acc.note("identity_shift_invariance", max(
                abs(rep2.a_dot - rep.a_dot), abs(rep2.bound_cr - rep.bound_cr),
                abs(rep2.bound_upper - rep.bound_upper),
                abs(rep2.bound_lower - rep.bound_lower)) / scale, 1e-10)
            h_diag = frame.from_frame(np.diag(rng.normal(size=dim).astype(complex)))
            try:
                hf = heat_flux_bound(pt, ops, HermitianOperator(h_diag), tol)
            except BoundViolationError as exc:
                hf = exc.report
            acc.note("heat_flux_bound",
                     (abs(hf.flux) - hf.bound) / (1.0 + hf.bound) if hf.asserted else 0.0,
                     1e-9)
        elif k == 4:
            fast = split_observable(ops.sld, frame)
            rep_f = speed_report(fast, pt, ops, tol=tol)
            acc.note("saturation_full_sld",
                     abs(rep_f.bound_cr - abs(rep_f.a_dot)) / scale, 1e-8)
            if ops.fisher_coh > 1e-9 and ops.fisher_inc > 1e-9:
                c = 1.0 + 2.0 * ops.fisher_inc / ops.fisher_coh
                lower_obs = c * ops.sld_coh.matrix - ops.sld_inc.matrix
                ls = split_observable(lower_obs, frame)
                rep_l = speed_report(ls, pt, ops, tol=tol)
                acc.note("saturation_lower",
                         abs(abs(rep_l.a_dot)
                             - (abs(rep_l.a_dot_coh) - rep_l.bound_inc)) / scale, 1e-8)
                opp = ops.sld_coh.matrix - ops.sld_inc.matrix
                osplit = split_observable(opp, frame)
                rep_o = speed_report(osplit, pt, ops, tol=tol)
                acc.note("saturation_lower_opposite_signs",
                         abs(abs(rep_o.a_dot) - rep_o.bound_lower) / scale, 1e-8)

    invariants = acc.summary()
    return {
        "seed": seed, "trials": trials, "dims": list(dims),
        "invariants": invariants,
        "pass": all(rec["ok"] for rec in invariants.values()),
    }
