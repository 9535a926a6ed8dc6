"""Shared fixtures for application layer tests."""

import json
from pathlib import Path

import pytest

from pacecore.adapters.codecs import instance_to_document
from pacecore.adapters.exporters import FileExporter
from pacecore.adapters.formatters import JSONFormatter
from pacecore.application.export import ArtifactSink
from pacecore.application.format import RecordFormatter
from pacecore.domain.costs import ItemCoverage
from pacecore.domain.instances import make_uniform_single_agent
from pacecore.domain.model import Box, DistributionSpec, Instance


@pytest.fixture
def json_formatter() -> RecordFormatter:
    """Create a JSON formatter instance."""
    return JSONFormatter()


@pytest.fixture
def file_exporter(tmp_path: Path) -> ArtifactSink:
    """Create a file exporter with tmp_path as allowed base dir."""
    return FileExporter(allowed_base_dir=tmp_path)


@pytest.fixture
def uniform_instance_file(tmp_path: Path) -> Path:
    """Write the single uniform agent with share 1/2 as an instance document."""
    path = tmp_path / "uniform.json"
    document = instance_to_document(make_uniform_single_agent(0.5, horizon=2_000, seed=11))
    path.write_text(json.dumps(document), encoding="utf-8")
    return path


@pytest.fixture
def two_goods_instance_file(tmp_path: Path) -> Path:
    """Write two agents and two goods under an item-coverage cost as an instance document."""
    dist = DistributionSpec(
        n=2,
        m=2,
        components=(Box(probability=1.0, low=((0.0, 0.0), (0.0, 0.0)), high=((1.0, 1.0), (1.0, 1.0))),),
        costs=(ItemCoverage(weights=(0.6, 0.6), cap=1.0),),
    )
    instance = Instance(n=2, m=2, horizon=500, shares=(0.3, 0.3), dist=dist, seed=17, name="two-goods")
    path = tmp_path / "two-goods.json"
    path.write_text(json.dumps(instance_to_document(instance)), encoding="utf-8")
    return path
