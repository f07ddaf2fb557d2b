"""Entry point for the Skillscape CLI application."""

from .cli import app

if __name__ == "__main__":
    app()
