"""
Routes package initialization.
"""

from routes.audit_routes import router

__all__ = ["router"]
