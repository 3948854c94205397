import os
import sys
import pytest

# プロジェクトルートと src ディレクトリをパスに追加
CURRENT_DIR = os.path.dirname(os.path.abspath(__file__))
ROOT_DIR = os.path.normpath(os.path.join(CURRENT_DIR, '..'))
SRC_DIR = os.path.join(ROOT_DIR, 'src')
for path in (SRC_DIR, ROOT_DIR):
    if os.path.isdir(path) and path not in sys.path:
        sys.path.insert(0, path)

# テスト用フィクスチャ
from experiments.replicas import ReplicaPool  # noqa: E402

ACCEPTANCE_ENV = "LPP_LAB_ACCEPTANCE"


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: 大規模な受け入れ実行（LPP_LAB_ACCEPTANCE=1 で有効）")


def pytest_collection_modifyitems(config, items):
    if os.getenv(ACCEPTANCE_ENV) == "1":
        return
    skip = pytest.mark.skip(reason=f"{ACCEPTANCE_ENV}=1 のときのみ実行")
    for item in items:
        if "acceptance" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def serial_pool():
    return ReplicaPool(jobs=1)
