"""
Command Line Interface for ssprofile.
"""

import logging
import sys
import time

import click

from .equations import EquationKind

# Numerical modules are imported inside the commands so that --help stays fast

logger = logging.getLogger("ssprofile")

EQUATIONS = [kind.value for kind in EquationKind]


def configure_logging(verbose: bool) -> None:
    """Route library logs to stderr; DEBUG with --verbose, INFO otherwise."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr, force=True)


def error_exit(message, show_trace=False):
    """Print an error (with traceback when asked) and exit with status 1."""
    logger.error(message)
    if show_trace:
        import traceback
        click.echo(f"Error: {message}", err=True)
        click.echo(traceback.format_exc(), err=True)
    else:
        click.echo(f"Error: {message}. Run with --verbose for details.", err=True)
    sys.exit(1)


def parse_amplitudes(values):
    """Complex amplitudes from repeated and comma separated options, deduplicated."""
    from .fixedpoint import _parse_complex

    parsed = []
    for value in values:
        for item in str(value).split(","):
            if item.strip():
                parsed.append(_parse_complex(item.strip()))
    unique = list(dict.fromkeys(parsed))
    if len(unique) < len(parsed):
        logger.warning(f"Dropped {len(parsed) - len(unique)} duplicate amplitude values")
    return unique


def _solver_overrides(equation, kappa, backend, window, max_iters, amplitude=None):
    return {"solver": {"equation": equation, "kappa": kappa, "backend": backend,
                       "window": window, "max_iters": max_iters, "amplitude": amplitude}}


def _stored_solution(sidecar, need_report=True):
    """Profile, parameters, solver settings and report stored beside a sidecar."""
    from .artifacts import read_profile
    from .fixedpoint import SolveConfig, SolveReport

    stored = read_profile(sidecar)
    solver = dict(stored.solver)
    quadrature = solver.pop("quadrature", {})
    if not solver:
        solver = {"equation": stored.profile.equation.value, "kappa": stored.profile.kappa}
    cfg = SolveConfig.from_dict({"solver": solver, "quadrature": quadrature})
    report = SolveReport.from_dict(stored.report) if stored.report else None
    if need_report and report is None:
        raise click.UsageError(f"{sidecar} holds no solve report")
    return stored, cfg, report


@click.group()
@click.version_option()
def main():
    """ssprofile CLI - construct and check small self-similar profiles."""
    pass


@main.command()
@click.option('--equation', '-e', type=click.Choice(EQUATIONS), default=None,
              help='Equation to solve (default: from config, else kdv4)')
@click.option('--c', 'c_value', default=None,
              help='Zero-frequency value c (mkdv, kdv4, mbo); complex as 0.01+0.002j')
@click.option('--A', 'A_value', default=None, help='High-frequency amplitude A (nls)')
@click.option('--kappa', type=float, default=None, help='Decay exponent of the remainder norm')
@click.option('--config', 'config_path', type=click.Path(), default=None,
              help='JSON run configuration')
@click.option('--out', '-o', default='output', help='Output root directory')
@click.option('--backend', type=click.Choice(['spectral', 'panel']), default=None,
              help='Multilinear operator backend')
@click.option('--window', type=float, default=None, help='Frequency window of the solve')
@click.option('--max-iters', type=int, default=None, help='Picard iteration budget')
@click.option('--verbose', '-v', is_flag=True, help='Show detailed output')
def solve(equation, c_value, A_value, kappa, config_path, out, backend, window, max_iters,
          verbose):
    """
    Solve the profile equation by Picard iteration.

    Writes profile.csv, profile.json, report.json, config.json and
    manifest.json into <out>/solve-<digest>. Exits with status 1 when the
    iteration does not converge; the report is written in that case too.
    """
    configure_logging(verbose)
    from .artifacts import RunManifest, run_directory, save_json, write_profile
    from .config import config_digest, load_config, write_config
    from .errors import NonConvergenceError, SSProfileError
    from .fixedpoint import SolveConfig, picard_solve

    start = time.time()
    if c_value is not None and A_value is not None:
        raise click.UsageError("Pass either --c or --A, not both")
    amplitude = c_value if c_value is not None else A_value
    try:
        config = load_config(config_path, _solver_overrides(
            equation, kappa, backend, window, max_iters, amplitude))
        cfg = SolveConfig.from_dict(config)
        driving = cfg.law.driving
        if (driving == "A" and c_value is not None) or (driving == "c" and A_value is not None):
            raise click.UsageError(
                f"{cfg.equation.value} is driven by {driving}; use --{driving}")
        digest = config_digest(config)
        run_dir = run_directory(out, "solve", digest)
        config_file = write_config(config, run_dir / "config.json")
        manifest = RunManifest(command="solve", config_digest=digest,
                               inputs=[str(config_path)] if config_path else [])
        try:
            z, params, report = picard_solve(cfg)
        except NonConvergenceError as e:
            report_path = save_json({"equation": cfg.equation.value, "status": "not_converged",
                                     "message": str(e), "history": e.history},
                                    run_dir / "report.json")
            manifest.outputs = [str(config_file), str(report_path)]
            manifest.status = "not_converged"
            manifest.wall_time = time.time() - start
            manifest.write(run_dir / "manifest.json")
            error_exit(str(e), verbose)

        csv_path, sidecar_path = write_profile(run_dir, z, params, cfg.to_dict(), report)
        report_path = save_json(report.to_dict(), run_dir / "report.json")
        manifest.outputs = [str(p) for p in (config_file, csv_path, sidecar_path, report_path)]
        manifest.wall_time = time.time() - start
        manifest.write(run_dir / "manifest.json")
    except SSProfileError as e:
        error_exit(str(e), verbose)

    click.echo(f"Converged in {report.iterations} iterations "
               f"(norm {report.final_norm.norm_total:.3e}, A = {params.A:.8g})")
    click.echo(f"Profile saved to {sidecar_path}")


@main.command()
@click.option('--profile', 'sidecar', type=click.Path(), default=None,
              help='Profile sidecar JSON written by solve')
@click.option('--check', 'checks', multiple=True,
              help='Check to run (repeatable); default: all checks that apply')
@click.option('--out', '-o', default='output', help='Output root directory')
@click.option('--verbose', '-v', is_flag=True, help='Show detailed output')
def verify(sidecar, checks, out, verbose):
    """
    Run verification checks and write verify.json.

    Without --profile only the operator checks run. Exits with status 1 when
    any selected check fails.
    """
    configure_logging(verbose)
    from .artifacts import RunManifest, run_directory, save_json
    from .config import config_digest
    from .errors import SSProfileError
    from .verify import OPERATOR_CHECKS, PROFILE_CHECKS, run_checks

    start = time.time()
    try:
        solution = None
        if sidecar is not None:
            stored, cfg, report = _stored_solution(sidecar)
            solution = (stored.profile, stored.params, cfg, report)
        names = list(dict.fromkeys(checks)) if checks else (
            list(PROFILE_CHECKS) if solution is not None else list(OPERATOR_CHECKS))
        verdicts = run_checks(names, solution=solution)
        results = [v.to_dict() for v in verdicts]
        passed = all(v.passed for v in verdicts)
        digest = config_digest({"checks": names, "profile": str(sidecar)})
        run_dir = run_directory(out, "verify", digest)
        verdict_path = save_json({"passed": passed, "verdicts": results}, run_dir / "verify.json")
        RunManifest(command="verify", config_digest=digest,
                    inputs=[str(sidecar)] if sidecar else [], outputs=[str(verdict_path)],
                    wall_time=time.time() - start, verdicts=results,
                    status="ok" if passed else "failed").write(run_dir / "manifest.json")
    except FileNotFoundError as e:
        error_exit(f"Cannot open {e.filename}", verbose)
    except SSProfileError as e:
        error_exit(str(e), verbose)

    for v in verdicts:
        click.echo(f"{v.name}: {'pass' if v.passed else 'FAIL'}")
    click.echo(f"Verdicts saved to {verdict_path}")
    if not passed:
        error_exit("Some checks failed")


@main.command()
@click.option('--equation', '-e', type=click.Choice(EQUATIONS), default=None,
              help='Equation to solve (default: from config, else kdv4)')
@click.option('--c', 'values', multiple=True,
              help='Driving amplitude (repeatable or comma separated)')
@click.option('--kappa', type=float, default=None, help='Decay exponent of the remainder norm')
@click.option('--config', 'config_path', type=click.Path(), default=None,
              help='JSON run configuration')
@click.option('--out', '-o', default='output', help='Output root directory')
@click.option('--backend', type=click.Choice(['spectral', 'panel']), default=None,
              help='Multilinear operator backend')
@click.option('--verbose', '-v', is_flag=True, help='Show detailed output')
def sweep(equation, values, kappa, config_path, out, backend, verbose):
    """
    Solve along a list of driving amplitudes and write sweep.csv.

    Rows (c, A, norm, iterations) are sorted by the driving amplitude's
    modulus; duplicates are dropped with a warning.
    """
    configure_logging(verbose)
    from concurrent.futures import ThreadPoolExecutor

    from .artifacts import RunManifest, run_directory, write_sweep
    from .config import config_digest, load_config, thread_count
    from .errors import SSProfileError
    from .fixedpoint import SolveConfig, picard_solve

    start = time.time()
    try:
        amplitudes = sorted(parse_amplitudes(values), key=lambda a: (abs(a), a.real, a.imag))
        config = load_config(config_path, _solver_overrides(equation, kappa, backend, None,
                                                            None))
        cfg = SolveConfig.from_dict(config)
        digest = config_digest({"config": config, "amplitudes": [str(a) for a in amplitudes]})
        run_dir = run_directory(out, "sweep", digest)

        def run(amplitude):
            _, _, report = picard_solve(cfg.replace(amplitude=amplitude))
            return {"c": report.c_value, "A": report.A_value,
                    "norm": report.final_norm.norm_total, "iterations": report.iterations}

        with ThreadPoolExecutor(max_workers=thread_count()) as executor:
            futures = [executor.submit(run, a) for a in amplitudes]
            rows = [future.result() for future in futures]
        sweep_path = write_sweep(run_dir / "sweep.csv", rows)
        RunManifest(command="sweep", config_digest=digest,
                    inputs=[str(config_path)] if config_path else [],
                    outputs=[str(sweep_path)],
                    wall_time=time.time() - start).write(run_dir / "manifest.json")
    except SSProfileError as e:
        error_exit(str(e), verbose)

    click.echo(f"Solved {len(rows)} amplitudes; table saved to {sweep_path}")


@main.command()
@click.option('--profile', 'sidecar', type=click.Path(), required=True,
              help='Profile sidecar JSON written by solve')
@click.option('--t', 'time_value', type=float, default=1.0, help='Time of the field')
@click.option('--x-max', type=float, default=None, help='Half width of the x range')
@click.option('--x-nodes', type=int, default=None, help='Number of x nodes')
@click.option('--crosscheck', 'crosscheck_dt', type=float, default=None,
              help='Also run the split-step evolution check over this time step')
@click.option('--config', 'config_path', type=click.Path(), default=None,
              help='JSON run configuration (reconstruct section)')
@click.option('--out', '-o', default='output', help='Output root directory')
@click.option('--verbose', '-v', is_flag=True, help='Show detailed output')
def reconstruct(sidecar, time_value, x_max, x_nodes, crosscheck_dt, config_path, out, verbose):
    """
    Synthesize the physical profile and write field.csv / field.json.

    The field is computed at t = 1 and rescaled to --t along the
    self-similar flow.
    """
    configure_logging(verbose)
    from .artifacts import RunManifest, run_directory, save_json, write_field
    from .config import config_digest, load_config
    from .errors import SSProfileError
    from .reconstruct import (ReconstructConfig, evolution_crosscheck, physical_profile,
                              selfsimilar_field)

    start = time.time()
    try:
        config = load_config(config_path, {"reconstruct": {"x_max": x_max, "x_nodes": x_nodes}})
        rcfg = ReconstructConfig.from_dict(config)
        stored, _, _ = _stored_solution(sidecar, need_report=False)
        if time_value <= 0:
            raise click.UsageError("--t must be positive")
        physical = physical_profile(stored.params, stored.profile, cfg=rcfg)
        if time_value != 1.0:
            physical = selfsimilar_field(physical, time_value)
        digest = config_digest({"config": config, "profile": str(sidecar), "t": time_value,
                                "crosscheck": crosscheck_dt})
        run_dir = run_directory(out, "reconstruct", digest)
        outputs = list(write_field(run_dir, physical))
        if crosscheck_dt is not None:
            check = evolution_crosscheck(stored.params, stored.profile, crosscheck_dt, rcfg)
            outputs.append(save_json(check.to_dict(), run_dir / "crosscheck.json"))
            click.echo(f"Evolution discrepancy {check.discrepancy:.3e} "
                       f"(linear flow alone {check.linear_discrepancy:.3e})")
        RunManifest(command="reconstruct", config_digest=digest, inputs=[str(sidecar)],
                    outputs=[str(p) for p in outputs],
                    wall_time=time.time() - start).write(run_dir / "manifest.json")
    except FileNotFoundError as e:
        error_exit(f"Cannot open {e.filename}", verbose)
    except SSProfileError as e:
        error_exit(str(e), verbose)

    click.echo(f"Field at t={time_value:g} saved to {outputs[0]}")


@main.command()
@click.option('--profile', 'sidecar', type=click.Path(), required=True,
              help='Profile sidecar JSON written by solve')
@click.option('--xi-min', type=float, default=-10.0, help='First frequency')
@click.option('--xi-max', type=float, default=10.0, help='Last frequency')
@click.option('--points', type=int, default=201, help='Number of frequencies')
@click.option('--log', 'log_spacing', is_flag=True,
              help='Logarithmic spacing (needs 0 < xi-min < xi-max)')
@click.option('--with-ansatz', is_flag=True, help='Export S_A + z instead of z')
@click.option('--out', '-o', 'out_file', default='profile_samples.csv', help='Output CSV file')
@click.option('--verbose', '-v', is_flag=True, help='Show detailed output')
def export(sidecar, xi_min, xi_max, points, log_spacing, with_ansatz, out_file, verbose):
    """Evaluate a stored profile on a user grid and write xi,re_z,im_z,re_dz,im_dz."""
    configure_logging(verbose)
    import numpy as np

    from .ansatz import eval_ansatz, eval_ansatz_deriv
    from .artifacts import write_samples
    from .errors import SSProfileError

    if points < 2 or xi_max <= xi_min:
        raise click.UsageError("Need --points >= 2 and --xi-max > --xi-min")
    if log_spacing and xi_min <= 0:
        raise click.UsageError("--log needs a positive --xi-min")
    try:
        stored, _, _ = _stored_solution(sidecar, need_report=False)
        xi = (np.geomspace(xi_min, xi_max, points) if log_spacing
              else np.linspace(xi_min, xi_max, points))
        z = stored.profile.evaluate(xi)
        dz = stored.profile.evaluate_deriv(xi)
        if with_ansatz:
            z = z + eval_ansatz(stored.params, xi)
            dz = dz + eval_ansatz_deriv(stored.params, xi)
        path = write_samples(out_file, xi, z, dz)
    except FileNotFoundError as e:
        error_exit(f"Cannot open {e.filename}", verbose)
    except SSProfileError as e:
        error_exit(str(e), verbose)

    click.echo(f"Exported {points} samples to {path}")


if __name__ == '__main__':
    main()
