"""Access to the bundled network and injection documents."""

from importlib import resources


def bundled_path(name: str):
    """Filesystem path of a bundled data file (e.g. ``ieee37_network.json``)."""
    path = resources.files("mplf") / "data" / name
    if not path.is_file():
        available = sorted(p.name for p in (resources.files("mplf") / "data").iterdir())
        raise FileNotFoundError(f"no bundled file {name!r}; available: {available}")
    return path
