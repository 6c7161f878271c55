"""Main entry point for biblio_connectivity package."""

if __name__ == "__main__":
    # Allow running as: python -m biblio_connectivity
    import sys

    from biblio_connectivity.cli import main

    sys.exit(main())
