from .app import ApiError, ServiceState, create_app

__all__ = ["ApiError", "ServiceState", "create_app"]
