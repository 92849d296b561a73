"""FastAPI application wiring the runner functions to HTTP endpoints.

Operational failures surface as HTTP 400 with a structured error body carrying
the error class name and the process exit code a CLI should use; unexpected
failures keep FastAPI's 500 behavior.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, runner
from ..errors import DataFormatError, FilmthickError
from . import schemas

_ERROR_STATUS = 400


def _error_body(kind: str, exit_code: int, message: str) -> dict:
    return {"error": {"kind": kind, "exit_code": exit_code, "message": message}}


def create_app() -> FastAPI:
    app = FastAPI(title="filmthick", version=__version__)

    @app.exception_handler(FilmthickError)
    async def handle_filmthick_error(request: Request, exc: FilmthickError):
        return JSONResponse(status_code=_ERROR_STATUS,
                            content=_error_body(type(exc).__name__,
                                                exc.exit_code, str(exc)))

    @app.exception_handler(OSError)
    async def handle_os_error(request: Request, exc: OSError):
        return JSONResponse(status_code=_ERROR_STATUS,
                            content=_error_body(DataFormatError.__name__,
                                                DataFormatError.exit_code,
                                                str(exc)))

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/simulate", response_model=schemas.SimulateResponse,
              responses={_ERROR_STATUS: {"model": schemas.ErrorResponse}})
    def simulate(req: schemas.SimulateRequest):
        return runner.run_simulate(req.output_dir, profile=req.profile,
                                   seed=req.seed, split=req.split,
                                   single_thread=req.single_thread,
                                   request=req.model_dump())

    @app.post("/pretrain", response_model=schemas.PretrainResponse,
              responses={_ERROR_STATUS: {"model": schemas.ErrorResponse}})
    def pretrain(req: schemas.PretrainRequest):
        return runner.run_pretrain(req.dataset_dir, req.output_dir,
                                   profile=req.profile, seeds=req.seeds,
                                   epochs=req.epochs, batch_size=req.batch_size,
                                   learning_rate=req.learning_rate,
                                   multitask=req.multitask, dtype=req.dtype,
                                   network=req.network, eval_every=req.eval_every,
                                   single_thread=req.single_thread,
                                   request=req.model_dump())

    @app.post("/retrain", response_model=schemas.RetrainResponse,
              responses={_ERROR_STATUS: {"model": schemas.ErrorResponse}})
    def retrain(req: schemas.RetrainRequest):
        return runner.run_retrain(req.checkpoint, req.output_dir, mode=req.mode,
                                  target_dir=req.target_dir,
                                  pseudo_count=req.pseudo_count,
                                  pseudo_seed=req.pseudo_seed,
                                  train_count=req.train_count,
                                  split_seed=req.split_seed,
                                  draws_train=req.draws_train,
                                  draws_test=req.draws_test, epochs=req.epochs,
                                  single_thread=req.single_thread,
                                  request=req.model_dump())

    @app.post("/direct", response_model=schemas.DirectResponse,
              responses={_ERROR_STATUS: {"model": schemas.ErrorResponse}})
    def direct(req: schemas.DirectRequest):
        return runner.run_direct(req.output_dir, target_dir=req.target_dir,
                                 pseudo_count=req.pseudo_count,
                                 pseudo_seed=req.pseudo_seed,
                                 train_count=req.train_count,
                                 split_seed=req.split_seed,
                                 draws_train=req.draws_train,
                                 draws_test=req.draws_test, profile=req.profile,
                                 seed=req.seed, epochs=req.epochs,
                                 multitask=req.multitask, network=req.network,
                                 single_thread=req.single_thread,
                                 request=req.model_dump())

    @app.post("/predict", response_model=schemas.PredictResponse,
              responses={_ERROR_STATUS: {"model": schemas.ErrorResponse}})
    def predict(req: schemas.PredictRequest):
        return runner.run_predict(req.checkpoints, req.spectra,
                                  output_csv=req.output_csv,
                                  single_thread=req.single_thread,
                                  request=req.model_dump())

    @app.post("/evaluate", response_model=schemas.EvaluateResponse,
              responses={_ERROR_STATUS: {"model": schemas.ErrorResponse}})
    def evaluate(req: schemas.EvaluateRequest):
        return runner.run_evaluate(req.checkpoints, req.dataset_dir,
                                   part=req.part, output_dir=req.output_dir,
                                   single_thread=req.single_thread,
                                   request=req.model_dump())

    @app.post("/fit", response_model=schemas.FitResponse,
              responses={_ERROR_STATUS: {"model": schemas.ErrorResponse}})
    def fit(req: schemas.FitRequest):
        return runner.run_fit(req.spectra_csv, req.index_csv,
                              output_dir=req.output_dir, d_min_nm=req.d_min_nm,
                              d_max_nm=req.d_max_nm, step_nm=req.step_nm,
                              r_weight=req.r_weight, t_weight=req.t_weight,
                              substrate_n=req.substrate_n,
                              substrate_k=req.substrate_k,
                              coherent=req.coherent,
                              single_thread=req.single_thread,
                              request=req.model_dump())

    @app.post("/activations", response_model=schemas.ActivationsResponse,
              responses={_ERROR_STATUS: {"model": schemas.ErrorResponse}})
    def activations(req: schemas.ActivationsRequest):
        return runner.run_activations(req.checkpoint, req.spectra_csv,
                                      req.output_dir,
                                      filters_per_layer=req.filters_per_layer,
                                      seed=req.seed,
                                      single_thread=req.single_thread,
                                      request=req.model_dump())

    return app
