"""
BD-RIS Full-Duplex Explorer.
This app runs one joint precoder/combiner/scattering solve and shows the rates, objective trace and beampatterns.
"""

import logging
import os

from dotenv import load_dotenv

from utils.ui_components import create_application

# Create and launch the app
if __name__ == "__main__":
    load_dotenv()
    logging.basicConfig(
        level=getattr(logging, os.getenv("BDRIS_LOG_LEVEL", "INFO").upper(), logging.INFO),
        format="%(asctime)s - %(levelname)s - %(message)s",
    )
    app = create_application()
    app.launch(server_name=os.getenv("GRADIO_SERVER_NAME", "0.0.0.0"), server_port=7860)
