"""Entry point: VQA_BIND=0.0.0.0:8200 python -m vqa_sidecar"""

import logging

import uvicorn

from .config import SidecarConfig
from .service import create_app


def main() -> None:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")
    config = SidecarConfig.from_env()
    host, port = config.host_port()
    uvicorn.run(create_app(config), host=host, port=port)


if __name__ == "__main__":
    main()
