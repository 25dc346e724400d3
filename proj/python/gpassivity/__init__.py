"""Global-passivity thermodynamic inequality toolkit."""

import json as _json

try:
    from ._gpassivity import *  # noqa: F401,F403  (installed package layout)
    from . import _gpassivity as _core
except ImportError:  # flat build-tree layout used by the ctest smoke test
    from _gpassivity import *  # noqa: F401,F403
    import _gpassivity as _core


def run_scenario(scenario, **parameters):
    """Run a named scenario; returns dict with exit_code, summary and report."""
    return _json.loads(_core.run_scenario_json(scenario, _json.dumps(parameters)))


def scenario_csv(scenario, **parameters):
    """CSV series for a named scenario, identical to the CLI output."""
    return _core.scenario_csv(scenario, _json.dumps(parameters))
