"""HTTP service wrapping the planning engine."""

from .schemas import PlanRequest, PlanResponse

__all__ = ["PlanRequest", "PlanResponse", "create_app"]


def create_app(*args, **kwargs):
    from .app import create_app as _create_app

    return _create_app(*args, **kwargs)
