import logging
import os

from ..core.config import settings

log_dir = settings.logs_dir
os.makedirs(log_dir, exist_ok=True)

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.log_level.upper(), logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler(os.path.join(log_dir, 'eahkit.log')),
        logging.StreamHandler()
    ]
)

logger = logging.getLogger("eahkit")
