from __future__ import annotations

import sys

import pytest

import helpers
from ctxbank.pipeline.templates import TemplateSet


@pytest.fixture(scope="session")
def store(tmp_path_factory):
    return helpers.make_store(tmp_path_factory.mktemp("store"))


@pytest.fixture(scope="session")
def templates():
    return TemplateSet.builtin()


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is not None and module.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in module.RESULTS:
            terminalreporter.write_line(line)
