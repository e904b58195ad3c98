from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from library.errors import InputParseError, ModelViolation, ResourceCapExceeded
from routers import router_modules
from utils.settings import configure_logging

configure_logging()

app = FastAPI(title="Urn Chain Default Model API")

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.exception_handler(InputParseError)
async def input_parse_error(request: Request, exc: InputParseError):
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.exception_handler(ModelViolation)
async def model_violation(request: Request, exc: ModelViolation):
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.exception_handler(ResourceCapExceeded)
async def resource_cap(request: Request, exc: ResourceCapExceeded):
    return JSONResponse(status_code=413, content={"detail": str(exc)})


for module in router_modules:
    app.include_router(module.router)
