"""Command-line surface: closed-form bounds, numerical maximizers, exhaustive
LHV oracles, single simulations, and (gamma, eta) sweeps.

Exit codes: 0 success / all checks pass, 1 assertion failure (a bound was
exceeded or an optimizer fell short), 2 usage or configuration error.
"""
from __future__ import annotations

import json
import math
import os
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

import click

from . import bounds as bounds_mod
from . import experiment as exp_mod
from . import lhv, quantum
from .core import (
    NoiseParameters,
    SettingTriple,
    make_setting,
    model_from_json_str,
    setting_triple_from_json,
    validate_model,
)


def _fmt(x: float) -> str:
    """Human-readable numbers: 10 significant digits."""
    return f"{x:.10g}"


def _emit_json(obj) -> None:
    click.echo(json.dumps(obj, indent=2, sort_keys=True))


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


@click.group()
def main() -> None:
    """Original Bell inequality toolkit."""


# ---------------------------------------------------------------------------
# bounds


@main.command("bounds")
@click.option("--gamma", type=float, default=None, help="Anti-correlation fraction 1-epsilon.")
@click.option("--eta", type=float, default=None, help="Joint detection efficiency.")
@click.option("--json", "as_json", is_flag=True, help="Emit structured JSON.")
def cmd_bounds(gamma, eta, as_json):
    """Print classical/quantum bounds, violation fractions, and thresholds."""
    ob = bounds_mod.ob_bounds()
    chsh = bounds_mod.chsh_bounds()
    payload = {
        "ob": {"classical": ob.classical_bound, "quantum": ob.quantum_bound, "fraction": ob.fraction},
        "chsh": {
            "classical": chsh.classical_bound,
            "quantum": chsh.quantum_bound,
            "fraction": chsh.fraction,
        },
        "thresholds": {
            "gamma_min": 0.75,
            "eta_min": 8 / 9,
            "feasibility": "4*gamma + 9*eta > 12",
        },
    }
    if gamma is not None or eta is not None:
        g = 1.0 if gamma is None else gamma
        e = 1.0 if eta is None else eta
        try:
            params = NoiseParameters.from_gamma(g, e)
        except ValueError as exc:
            raise click.UsageError(str(exc))
        payload["point"] = {
            "gamma": g,
            "eta": e,
            "bound": bounds_mod.theorem4_bound(params),
            "feasible": bounds_mod.violation_feasible(params),
        }
    if as_json:
        _emit_json(payload)
        return
    click.echo("inequality  classical  quantum       fraction")
    click.echo(f"ob          {_fmt(ob.classical_bound):<10} {_fmt(ob.quantum_bound):<13} {_fmt(ob.fraction)}")
    click.echo(
        f"chsh        {_fmt(chsh.classical_bound):<10} {_fmt(chsh.quantum_bound):<13} {_fmt(chsh.fraction)}"
    )
    click.echo("violation thresholds: gamma > 0.75 (eta=1), eta > 8/9 = 0.8888888889 (gamma=1)")
    click.echo("feasibility region: 4*gamma + 9*eta > 12")
    if "point" in payload:
        p = payload["point"]
        click.echo(
            f"gamma={_fmt(p['gamma'])} eta={_fmt(p['eta'])}: "
            f"bound={_fmt(p['bound'])} feasible={'true' if p['feasible'] else 'false'}"
        )


# ---------------------------------------------------------------------------
# optimize


@main.command("optimize")
@click.argument("target", type=click.Choice(["ob", "chsh"]))
@click.option("--tolerance", type=float, default=1e-6, show_default=True)
@click.option("--grid", type=int, default=None, help="Grid points per angle for the coarse search.")
@click.option("--json", "as_json", is_flag=True)
def cmd_optimize(target, tolerance, grid, as_json):
    """Numerically maximize the chosen statistic and check the known optimum."""
    if tolerance <= 0:
        raise click.UsageError("tolerance must be positive")
    try:
        if target == "ob":
            kwargs = {} if grid is None else {"grid_points": grid}
            settings, value = quantum.maximize_delta_q(tolerance, **kwargs)
            vectors = {lab: list(settings.get(lab).axis) for lab in ("a", "b", "c")}
            analytic = quantum.QUANTUM_OB_MAX
        else:
            kwargs = {} if grid is None else {"grid_points": grid}
            four, value = quantum.maximize_chsh(tolerance, **kwargs)
            vectors = {
                lab: list(s.axis) for lab, s in zip(("a", "a2", "b", "b2"), four)
            }
            analytic = quantum.QUANTUM_CHSH_MAX
    except RuntimeError as exc:
        click.echo(f"optimizer shortfall: {exc}", err=True)
        sys.exit(1)
    payload = {"target": target, "value": value, "analytic": analytic, "settings": vectors}
    if as_json:
        _emit_json(payload)
    else:
        click.echo(f"{target} maximum: {_fmt(value)} (analytic {_fmt(analytic)})")
        for lab, vec in vectors.items():
            click.echo(f"  {lab} = ({', '.join(_fmt(x) for x in vec)})")
    if abs(value - analytic) > tolerance:
        sys.exit(1)


# ---------------------------------------------------------------------------
# verify


def _snap(value: float, atoms: int) -> Fraction:
    return Fraction(round(value * atoms), atoms)


@main.command("verify")
@click.option("--perfect", is_flag=True, help="Enumerate the 8 perfect-anticorrelation strategies.")
@click.option("--unconstrained", is_flag=True, help="Enumerate all 64 strategies (control arm).")
@click.option("--epsilon", "epsilons", type=float, multiple=True, help="Anti-correlation defects to probe.")
@click.option("--eta", "etas", type=float, multiple=True, help="Detection efficiencies to probe.")
@click.option("--atoms", type=int, default=9, show_default=True)
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--json", "as_json", is_flag=True)
def cmd_verify(perfect, unconstrained, epsilons, etas, atoms, model_path, as_json):
    """Run the exhaustive LHV oracles and assert every classical bound.

    Probe values of epsilon/eta are snapped to the nearest multiple of
    1/atoms (the oracle grids are exact rationals). With no selection flags,
    a default battery runs everything.
    """
    if atoms < 1 or atoms > 12:
        raise click.UsageError("atoms must lie in 1..12")
    run_all = not (perfect or unconstrained or epsilons or etas or model_path)
    if run_all:
        perfect = unconstrained = True
        epsilons = (0.0, 0.25, 0.5)
        etas = (1.0, 8 / 9)

    checks = []  # (name, achieved str, bound str, ok)

    if perfect:
        strategies = lhv.enumerate_strategies(True)
        values = [lhv.strategy_ob_statistic(s) for s in strategies]
        ok = len(strategies) == 8 and all(v == 1 for v in values)
        checks.append(("perfect enumeration (8 strategies)", str(max(values)), "1", ok))
    if unconstrained:
        maximum = lhv.classical_ob_maximum(False)
        # control arm: no bound asserted, recorded for reference
        checks.append(("unconstrained enumeration (64 strategies)", str(maximum), "3 (control)", True))
    for eps in epsilons:
        snapped = _snap(eps, atoms)
        if not 0 <= snapped <= 1:
            raise click.UsageError(f"epsilon {eps} outside [0, 1]")
        achieved = lhv.epsilon_ob_maximum(snapped, atoms)
        bound = 1 + 2 * snapped
        checks.append(
            (f"epsilon oracle eps={snapped} atoms={atoms}", str(achieved), str(bound), achieved <= bound)
        )
    for eta in etas:
        snapped = _snap(eta, atoms)
        if not 0 < snapped <= 1:
            raise click.UsageError(f"eta {eta} outside (0, 1]")
        if atoms > 10:
            raise click.UsageError("detection oracle supports atoms <= 10")
        achieved = lhv.detection_ob_maximum(snapped, atoms)
        bound = Fraction(4 - 3 * snapped, snapped)
        checks.append(
            (f"detection oracle eta={snapped} atoms={atoms}", str(achieved), str(bound), achieved <= bound)
        )

    witness = None
    if model_path:
        try:
            model = model_from_json_str(Path(model_path).read_text())
        except (ValueError, json.JSONDecodeError) as exc:
            raise click.UsageError(f"cannot read model file: {exc}")
        violations = validate_model(model)
        if violations:
            raise click.UsageError("invalid model: " + "; ".join(violations))
        eps_hat = max(
            sum(float(w) for w, f in zip(model.weights, model.anticorr_flag) if not f[s])
            for s in ("a", "b", "c")
        )
        delta = float(lhv.model_ob_statistic(model, pattern="e7"))
        bound2 = bounds_mod.theorem2_bound(eps_hat)
        checks.append(
            (f"model file (pattern e7, eps_hat={_fmt(eps_hat)})", _fmt(delta), _fmt(bound2), delta <= bound2 + 1e-9)
        )
        eta_hat = sum(float(w) for w, d in zip(model.weights, model.detect_flag) if d["ab"])
        if eta_hat < 1 - 1e-12:
            delta_t = float(lhv.model_ob_statistic(model, pattern="e10", conditional=True))
            bound4 = bounds_mod.theorem4_bound(NoiseParameters(epsilon=eps_hat, eta=eta_hat))
            checks.append(
                (
                    f"model file conditional (pattern e10, eta_hat={_fmt(eta_hat)})",
                    _fmt(delta_t),
                    _fmt(bound4),
                    delta_t <= bound4 + 1e-9,
                )
            )
        if not all(c[3] for c in checks):
            witness = json.loads(Path(model_path).read_text())

    all_ok = all(ok for _, _, _, ok in checks)
    if as_json:
        _emit_json(
            {
                "checks": [
                    {"name": n, "achieved": a, "bound": b, "pass": ok} for n, a, b, ok in checks
                ],
                "pass": all_ok,
                "witness": witness,
            }
        )
    else:
        for name, achieved, bound, ok in checks:
            status = "pass" if ok else "FAIL"
            click.echo(f"[{status}] {name}: achieved {achieved}, bound {bound}")
        if witness is not None:
            click.echo("witnessing model:")
            click.echo(json.dumps(witness, indent=2, sort_keys=True))
    if not all_ok:
        sys.exit(1)


# ---------------------------------------------------------------------------
# simulate / sweep configuration


def _parse_config_text(text: str) -> dict:
    """JSON is canonical; a minimal key=value subset (dotted keys, JSON
    scalar values) is accepted as a fallback."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return json.loads(text)
    cfg: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value.strip("\"'")
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = parsed
    return cfg


_DEFAULT_SETTINGS = {
    "a": (1.0, 0.0, 0.0),
    "b": (0.5, -math.sqrt(3) / 2, 0.0),
    "c": (-0.5, -math.sqrt(3) / 2, 0.0),
}


def _spec_from_config(cfg: dict, base_dir: Path, seed_override=None) -> exp_mod.ExperimentSpec:
    known = {
        "source", "gamma", "eta", "fair_sampling", "trials_per_pair",
        "seed", "statistic", "pattern", "settings", "model",
    }
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")

    statistic = cfg.get("statistic", "ob")
    raw_settings = cfg.get("settings")
    if statistic == "chsh":
        if not isinstance(raw_settings, list) or len(raw_settings) != 4:
            raise ValueError("settings: chsh needs a list of 4 vectors")
        settings = tuple(make_setting(v) for v in raw_settings)
    elif raw_settings is None:
        settings = setting_triple_from_json(_DEFAULT_SETTINGS)
    else:
        settings = setting_triple_from_json(raw_settings)

    model = None
    if cfg.get("source") == "lhv":
        model_ref = cfg.get("model")
        if model_ref is None:
            raise ValueError("model: required for source lhv (path to model JSON)")
        model_path = Path(model_ref)
        if not model_path.is_absolute():
            model_path = base_dir / model_path
        model = model_from_json_str(model_path.read_text())

    seed = seed_override if seed_override is not None else cfg.get("seed", 0)
    return exp_mod.ExperimentSpec(
        source=cfg.get("source", "quantum"),
        settings=settings,
        trials_per_pair=int(cfg.get("trials_per_pair", 100_000)),
        seed=int(seed),
        eta=float(cfg.get("eta", 1.0)),
        gamma=float(cfg.get("gamma", 1.0)),
        fair_sampling=bool(cfg.get("fair_sampling", True)),
        model=model,
        statistic=statistic,
        pattern=cfg.get("pattern", "e7"),
    )


def _load_spec(config_path: str, seed_override=None) -> exp_mod.ExperimentSpec:
    path = Path(config_path)
    try:
        cfg = _parse_config_text(path.read_text())
        return _spec_from_config(cfg, path.parent, seed_override)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"config {config_path}: {exc}")


@main.command("simulate")
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=".", show_default=True)
@click.option("--seed", type=int, default=None, help="Override the config's master seed.")
@click.option("--json", "as_json", is_flag=True)
def cmd_simulate(config, out_dir, seed, as_json):
    """Run one seeded experiment; write result.json and result.csv."""
    spec = _load_spec(config, seed_override=seed)
    try:
        result = exp_mod.run_experiment(spec)
    except RuntimeError as exc:
        click.echo(f"simulation failed: {exc}", err=True)
        sys.exit(1)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = exp_mod.result_to_json(result)
    payload["gamma"] = spec.gamma
    payload["eta"] = spec.eta
    _atomic_write(out / "result.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
    csv_text = (
        exp_mod.SUMMARY_CSV_HEADER + "\n" + exp_mod.summary_csv_row(spec.gamma, spec.eta, result) + "\n"
    )
    _atomic_write(out / "result.csv", csv_text)

    if as_json:
        _emit_json(payload)
    else:
        click.echo(
            f"statistic={_fmt(result.statistic)} se={_fmt(result.statistic_se)} "
            f"bound={_fmt(result.bound_used)} violation_sigma={_fmt(result.violation_sigma)}"
        )


def _parse_range(text: str, name: str) -> tuple[float, float]:
    try:
        lo_s, _, hi_s = text.partition(":")
        lo, hi = float(lo_s), float(hi_s if hi_s else lo_s)
    except ValueError:
        raise click.UsageError(f"--{name}-range must look like LO:HI")
    if hi < lo:
        raise click.UsageError(f"--{name}-range is empty ({text})")
    return lo, hi


@main.command("sweep")
@click.argument("config", type=click.Path(exists=True, dir_okay=False), required=False)
@click.option("--gamma-range", default="0:1", show_default=True)
@click.option("--eta-range", default="0:1", show_default=True)
@click.option("--step", type=float, default=0.01, show_default=True)
@click.option("--simulate", "do_simulate", is_flag=True, help="Add empirical columns from Monte Carlo runs.")
@click.option("--seed", type=int, default=None, help="Override the master seed.")
@click.option("--threads", type=int, default=1, show_default=True, help="0 = auto.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--json", "as_json", is_flag=True)
def cmd_sweep(config, gamma_range, eta_range, step, do_simulate, seed, threads, out_dir, as_json):
    """Tabulate the (gamma, eta) feasibility region, optionally with
    empirical sweep columns."""
    g_lo, g_hi = _parse_range(gamma_range, "gamma")
    e_lo, e_hi = _parse_range(eta_range, "eta")
    try:
        cells = bounds_mod.feasibility_grid((g_lo, g_hi), (e_lo, e_hi), step)
    except ValueError as exc:
        raise click.UsageError(str(exc))

    rows = [
        {
            "gamma": c.gamma,
            "eta": c.eta,
            "bound": c.bound,
            "feasible": c.feasible,
        }
        for c in cells
    ]
    header = "gamma,eta,bound,feasible"

    if do_simulate:
        if config is not None:
            template = _load_spec(config, seed_override=seed)
        else:
            template = exp_mod.ExperimentSpec(
                source="quantum",
                settings=setting_triple_from_json(_DEFAULT_SETTINGS),
                trials_per_pair=100_000,
                seed=seed if seed is not None else 0,
            )
        gammas = sorted({c.gamma for c in cells})
        etas = sorted({c.eta for c in cells})
        sim = {
            (s.gamma, s.eta): s
            for s in exp_mod.sweep(template, gammas, etas, threads=threads)
        }
        header += ",statistic,se,violation_sigma"
        for row in rows:
            cell = sim[(row["gamma"], row["eta"])]
            if cell.result is None:
                row["statistic"] = row["se"] = row["violation_sigma"] = math.nan
                row["error"] = cell.error
            else:
                row["statistic"] = cell.result.statistic
                row["se"] = cell.result.statistic_se
                row["violation_sigma"] = cell.result.violation_sigma

    lines = [header]
    for row in rows:
        fields = [f"{row['gamma']:.6f}", f"{row['eta']:.6f}", f"{row['bound']:.6f}",
                  "true" if row["feasible"] else "false"]
        if do_simulate:
            fields += [f"{row['statistic']:.10g}", f"{row['se']:.10g}", f"{row['violation_sigma']:.10g}"]
        lines.append(",".join(fields))
    csv_text = "\n".join(lines) + "\n"

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _atomic_write(out / "sweep.csv", csv_text)
    if as_json:
        _emit_json({"rows": rows})
    else:
        click.echo(csv_text, nl=False)


if __name__ == "__main__":
    main()
