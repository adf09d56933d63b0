"""Gateway: CLI, session persistence, and the live control service."""
