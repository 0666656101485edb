from .sessions import Session, SessionNotFound, SessionStore

__all__ = ["Session", "SessionNotFound", "SessionStore", "create_app"]


def create_app(store):
    from .http import create_app as _create

    return _create(store)
