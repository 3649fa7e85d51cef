"""Run the `pathint` CLI from a source checkout."""

from pathint.cli import main

if __name__ == "__main__":
    main()
