"""Service layer: pydantic schemas, operation handlers, HTTP app."""
