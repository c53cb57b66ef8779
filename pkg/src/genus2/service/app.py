"""FastAPI service exposing the compute objects and verification suites.

POST /compute/{object} with object in {period, nu, omega, projective,
zhu-coeffs, heisenberg, xi}; POST /verify/{suite} with suite in {all,
oracle, equivariance, <identity or check name>}.  Domain violations map
to HTTP 422 with a machine-readable error record.  Responses echo the
resolved configuration (truncation order, branch choice, tolerances) for
bit-for-bit reproducibility.
"""
from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse

from ..calculus import ResidualReport, xi_matrix
from ..elliptic import ConvergenceError, DomainViolation
from ..heisenberg import ModulePair, h_npoint, virasoro_one_point, z2_partition
from ..sewing import NonConvergence, required_order, sewing_context
from ..suite import SUITE_NAMES, SuiteConfig, run_suite, standard_grid
from ..zhu import gen_weierstrass, two_diff_basis, zhu_context
from .models import (
    ComputeRequest,
    ComputeResponse,
    ResidualItem,
    ValueItem,
    VerifyRequest,
    VerifyResponse,
    c2pair,
    parse_complex,
    parse_point,
)

COMPUTE_OBJECTS = ("period", "nu", "omega", "projective", "zhu-coeffs", "heisenberg", "xi")


def _error_payload(exc: Exception) -> dict:
    return {"error": {"type": type(exc).__name__, "message": str(exc)}}


def create_app() -> FastAPI:
    app = FastAPI(title="genus2", description="two-tori sewing and Zhu recursion service")

    @app.exception_handler(DomainViolation)
    async def _domain(request, exc):
        return JSONResponse(status_code=422, content=_error_payload(exc))

    @app.exception_handler(NonConvergence)
    async def _nonconv(request, exc):
        return JSONResponse(status_code=422, content=_error_payload(exc))

    @app.exception_handler(ConvergenceError)
    async def _conv(request, exc):
        return JSONResponse(status_code=422, content=_error_payload(exc))

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/compute/{obj}", response_model=ComputeResponse)
    def compute(obj: str, req: ComputeRequest):
        if obj not in COMPUTE_OBJECTS:
            raise HTTPException(404, f"unknown object {obj!r}; choose from {COMPUTE_OBJECTS}")
        cfg = req.config
        p = cfg.moduli.resolve()
        series = cfg.series()
        M = required_order(p, cfg.trunc_order, series) if cfg.auto_order else cfg.trunc_order
        values: list[ValueItem] = []

        def emit(inputs, z):
            values.append(ValueItem(inputs=inputs, value=c2pair(complex(z))))

        if obj == "period":
            om = sewing_context(p, M, series).omega_period
            for (i, j) in ((1, 1), (2, 2), (1, 2)):
                emit({"entry": f"Omega{i}{j}"}, om[i - 1, j - 1])
        elif obj == "nu":
            pts = [parse_point(s) for s in (req.points or ([req.x] if req.x else []))]
            if not pts:
                raise DomainViolation("nu needs --x or points")
            ctx = sewing_context(p, M, series)
            for x in pts:
                for i in (1, 2):
                    emit({"x": f"torus{x.torus}:{x.z}", "i": i}, ctx.nu(i, x))
        elif obj == "omega":
            if not (req.x and req.y):
                raise DomainViolation("omega needs --x and --y")
            x, y = parse_point(req.x), parse_point(req.y)
            emit({"x": req.x, "y": req.y}, sewing_context(p, M, series).omega(x, y))
        elif obj == "projective":
            pts = [parse_point(s) for s in (req.points or ([req.x] if req.x else []))]
            if not pts:
                raise DomainViolation("projective needs --x or points")
            ctx = sewing_context(p, M, series)
            for x in pts:
                emit({"x": f"torus{x.torus}:{x.z}"}, ctx.s_proj(x))
        elif obj == "zhu-coeffs":
            if not req.x:
                raise DomainViolation("zhu-coeffs needs --x")
            x = parse_point(req.x)
            N = req.weight
            zc = zhu_context(p, N, M, series)
            zv = np.array([x.z])
            emit({"x": req.x, "N": N, "coeff": "F1"}, zc.f_many(1, x.torus, zv)[0])
            emit({"x": req.x, "N": N, "coeff": "F2"}, zc.f_many(2, x.torus, zv)[0])
            fpi = zc.f_pi_many(x.torus, zv)[0]
            for m in range(1, max(2 * N - 2, 1)):
                emit({"x": req.x, "N": N, "coeff": f"FPi({m})"}, fpi[m - 1])
            if N == 2:
                phi = two_diff_basis(x, p, M, series)
                for r, v in enumerate(phi, start=1):
                    emit({"x": req.x, "coeff": f"Phi{r}"}, v)
            if req.y:
                y = parse_point(req.y)
                emit({"x": req.x, "y": req.y, "coeff": f"P({req.i},{1 + req.j})"},
                     gen_weierstrass(N, req.i, req.j, x, y, p, M, series))
        elif obj == "heisenberg":
            lam = ModulePair(parse_complex(req.lam[0]), parse_complex(req.lam[1]))
            emit({"lam": req.lam, "quantity": "Z"}, z2_partition(lam, p, M, series))
            pts = [parse_point(s) for s in req.points]
            if pts:
                emit({"lam": req.lam, "points": req.points, "quantity": "npoint"},
                     h_npoint(lam, pts, p, M, series))
            if req.x:
                x = parse_point(req.x)
                emit({"lam": req.lam, "x": req.x, "quantity": "virasoro_1pt"},
                     virasoro_one_point(lam, x, p, M, series))
        elif obj == "xi":
            xi = xi_matrix(p, M, series, cfg.quad())
            for r in range(3):
                for c in range(3):
                    emit({"entry": f"Xi{r + 1}{c + 1}"}, xi[r, c])
        return ComputeResponse(object=obj, config=cfg.echo(M, p.sqrt_eps), values=values)

    @app.post("/verify/{suite}", response_model=VerifyResponse)
    def verify(suite: str, req: VerifyRequest):
        cfg = req.config
        names = ("all",) if suite == "all" else (suite,)
        if suite != "all" and suite not in SUITE_NAMES:
            raise HTTPException(404, f"unknown suite {suite!r}; choose from {('all',) + SUITE_NAMES}")
        sc = SuiteConfig(
            M=cfg.trunc_order,
            auto_order=cfg.auto_order,
            series=cfg.series(),
            quad=cfg.quad(),
            fd=cfg.fd(),
            level_cap=max(cfg.level_cap, 2),
            tolerances=cfg.tolerances,
        )
        if not req.use_standard_grid:
            sc.grid = [cfg.moduli.resolve()]
        reports: list[ResidualReport] = run_suite(names, sc)
        items = [ResidualItem(**r.to_dict()) for r in reports]
        p = cfg.moduli.resolve()
        return VerifyResponse(
            object=f"verify:{suite}",
            config=cfg.echo(cfg.trunc_order, p.sqrt_eps),
            residuals=items,
            passed=all(r.passed or r.error is not None for r in reports),
        )

    return app


app = create_app()
