#!/usr/bin/env python3
"""
lpp_lab エントリーポイント
プロジェクトルートと src をパスに追加して CLI を起動する薄いラッパーです。
"""

import os
import sys

# プロジェクトルートと src をパスに追加
CURRENT_DIR = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, CURRENT_DIR)
sys.path.insert(0, os.path.join(CURRENT_DIR, "src"))

if __name__ == "__main__":
    from cli.main import main  # type: ignore
    sys.exit(main())
