"""Entry point for python -m coordconf."""

from coordconf.cli import app

if __name__ == "__main__":
    app()
