"""Command-line client for the compute/verify service.

The CLI is a thin HTTP client: it builds a request, sends it to the
service (an in-process instance by default, or a remote server via
--server), and renders the JSON response as json, csv or a table.

Exit codes: 0 on success / all residuals passing, 1 on a residual
failure, 2 on configuration or domain errors.
"""
from __future__ import annotations

import json
import sys

import click
import httpx


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=None)
    # in-process service instance behind the same httpx.Client interface
    import warnings

    from .service.app import create_app

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient
    return TestClient(create_app())


def _config_payload(tau1, tau2, eps, m, auto_order, q_terms, alpha_nodes, beta_panels,
                    beta_order, circle_nodes, fd_step, fd_levels, level_cap, tolerance):
    return {
        "moduli": {"tau1": tau1, "tau2": tau2, "eps": eps},
        "trunc_order": m,
        "auto_order": auto_order,
        "q_terms": q_terms,
        "alpha_nodes": alpha_nodes,
        "beta_panels": beta_panels,
        "beta_order": beta_order,
        "circle_nodes": circle_nodes,
        "fd_step": fd_step,
        "fd_levels": fd_levels,
        "level_cap": level_cap,
        "tolerances": {k: float(v) for k, v in (t.split("=", 1) for t in tolerance)},
    }


def _render(data: dict, fmt: str, output: str | None) -> str:
    if fmt == "json":
        text = json.dumps(data, indent=2, sort_keys=False)
    elif fmt == "csv":
        lines = []
        if "values" in data:
            lines.append("inputs,re,im")
            for item in data["values"]:
                inputs = ";".join(f"{k}={v}" for k, v in item["inputs"].items())
                lines.append(f"\"{inputs}\",{item['value'][0]!r},{item['value'][1]!r}")
        else:
            lines.append("name,max_residual,tolerance,passed,n_samples")
            for r in data["residuals"]:
                lines.append(f"{r['name']},{r['max_residual']},{r['tolerance']},"
                             f"{r['passed']},{r['n_samples']}")
        text = "\n".join(lines)
    else:  # table
        lines = []
        if "values" in data:
            for item in data["values"]:
                inputs = " ".join(f"{k}={v}" for k, v in item["inputs"].items())
                re_, im = item["value"]
                lines.append(f"{inputs:48s} {re_:+.15g} {im:+.15g}j")
        else:
            for r in data["residuals"]:
                status = "PASS" if r["passed"] else ("SKIP" if r.get("error") else "FAIL")
                mr = r["max_residual"]
                mr_s = f"{mr:.3g}" if mr is not None else "-"
                lines.append(f"{r['name']:16s} {status:4s} max={mr_s:10s} "
                             f"tol={r['tolerance']:g} n={r['n_samples']}")
        text = "\n".join(lines)
    if output:
        with open(output, "w") as fh:
            fh.write(text + "\n")
    return text


def _handle_response(resp: httpx.Response, fmt: str, output: str | None) -> int:
    if resp.status_code in (404, 422):
        click.echo(json.dumps(resp.json(), indent=2), err=True)
        return 2
    resp.raise_for_status()
    data = resp.json()
    click.echo(_render(data, fmt, output))
    if "passed" in data and not data["passed"]:
        return 1
    return 0


common_options = [
    click.option("--server", default=None, help="remote service URL (default: in-process)"),
    click.option("--tau1", default="i", show_default=True),
    click.option("--tau2", default="i", show_default=True),
    click.option("--eps", default="0", show_default=True),
    click.option("--m", default=16, show_default=True, help="truncation order"),
    click.option("--auto-order/--no-auto-order", default=True, show_default=True),
    click.option("--q-terms", default=128, show_default=True),
    click.option("--alpha-nodes", default=128, show_default=True),
    click.option("--beta-panels", default=24, show_default=True),
    click.option("--beta-order", default=16, show_default=True),
    click.option("--circle-nodes", default=128, show_default=True),
    click.option("--fd-step", default=1e-4, show_default=True),
    click.option("--fd-levels", default=1, show_default=True),
    click.option("--level-cap", default=6, show_default=True),
    click.option("--tolerance", multiple=True, help="override as name=value (repeatable)"),
    click.option("--format", "fmt", type=click.Choice(["json", "csv", "table"]),
                 default="json", show_default=True),
    click.option("--output", default=None, help="write the rendered output to a file"),
]


def with_common(f):
    for opt in reversed(common_options):
        f = opt(f)
    return f


@click.group()
def main():
    """Numerical genus-two sewing and Zhu-recursion toolkit."""


@main.command()
@click.argument("obj", type=click.Choice(["period", "nu", "omega", "projective",
                                          "zhu-coeffs", "heisenberg", "xi"]))
@click.option("--x", default=None, help="surface point, e.g. torus1:0.5+0.2i")
@click.option("--y", default=None)
@click.option("--point", "points", multiple=True, help="insertion point (repeatable)")
@click.option("--lam", "--lambda", "lam", nargs=2, default=("0", "0"),
              help="module labels lambda1 lambda2")
@click.option("--weight", default=2, show_default=True, help="reduction weight N")
@click.option("--i", "i_deriv", default=0, show_default=True)
@click.option("--j", "j_deriv", default=1, show_default=True)
@with_common
def compute(obj, x, y, points, lam, weight, i_deriv, j_deriv, server, fmt, output,
            tolerance, **cfg):
    """Compute one geometric or VOA object at a moduli point."""
    payload = {
        "config": _config_payload(tolerance=tolerance, **cfg),
        "x": x,
        "y": y,
        "points": list(points),
        "lam": list(lam),
        "weight": weight,
        "i": i_deriv,
        "j": j_deriv,
    }
    with _client(server) as client:
        resp = client.post(f"/compute/{obj}", json=payload)
        sys.exit(_handle_response(resp, fmt, output))


@main.command()
@click.argument("suite", default="all")
@click.option("--standard-grid/--single-point", default=True, show_default=True,
              help="run over the standard grid or only the given moduli")
@with_common
def verify(suite, standard_grid, server, fmt, output, tolerance, **cfg):
    """Run a verification suite (residual checks against tolerances)."""
    payload = {
        "config": _config_payload(tolerance=tolerance, **cfg),
        "use_standard_grid": standard_grid,
    }
    with _client(server) as client:
        resp = client.post(f"/verify/{suite}", json=payload)
        sys.exit(_handle_response(resp, fmt, output))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host, port):
    """Run the service under uvicorn."""
    import uvicorn

    uvicorn.run("genus2.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
