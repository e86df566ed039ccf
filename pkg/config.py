import os
import logging
from dotenv import load_dotenv

# 載入環境變數
load_dotenv()

logger = logging.getLogger(__name__)


class Settings:
    """執行期設定，來源為環境變數 (.env)，CLI 旗標可再覆寫"""

    def __init__(self):
        self.LOG_LEVEL = os.getenv("RS_LOG_LEVEL", "INFO").upper()
        self.VERTEX_BUDGET = int(os.getenv("RS_VERTEX_BUDGET", "5000"))
        self.EXACT_EDGE_LIMIT = int(os.getenv("RS_EXACT_EDGE_LIMIT", "12"))
        self.PACKET_BYTES = int(os.getenv("RS_PACKET_BYTES", "64"))
        self.WORKERS = max(1, int(os.getenv("RS_WORKERS", "1")))
        self.EXHAUSTIVE_LIMIT = int(os.getenv("RS_EXHAUSTIVE_LIMIT", "100000"))
        self.FIXTURE_DIR = os.getenv(
            "RS_FIXTURE_DIR",
            os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures")
        )
        self.ENABLE_RELAX = os.getenv("RS_ENABLE_RELAX", "true").lower() == "true"

    def summary(self) -> dict:
        """回傳目前設定（寫入報告用）"""
        return {
            "vertex_budget": self.VERTEX_BUDGET,
            "exact_edge_limit": self.EXACT_EDGE_LIMIT,
            "packet_bytes": self.PACKET_BYTES,
            "workers": self.WORKERS,
            "exhaustive_limit": self.EXHAUSTIVE_LIMIT,
        }


# 全局設定實例
settings = Settings()
