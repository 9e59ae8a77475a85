# covest Configuration
import os
import logging

from dotenv import load_dotenv

load_dotenv()


class Config:
    """Base configuration class"""

    basedir = os.path.abspath(os.path.dirname(__file__))

    # Eigen kernel (cyclic Jacobi)
    EIG_TOLERANCE = 1e-10
    JACOBI_OFFDIAG_TOLERANCE = 1e-12
    JACOBI_SWEEP_FACTOR = 100
    HERM_PAIR_TOLERANCE = 1e-8

    # Factorizations
    CHOLESKY_RIDGE = 1e-12
    CHOLESKY_PIVOT_TOLERANCE = 1e-14

    # Non-negative least squares
    NNLS_DUAL_TOLERANCE = 1e-10
    NNLS_KKT_TOLERANCE = 1e-8
    NNLS_ITERATION_FACTOR = 10

    # MIMO pipeline
    QUADRATURE_FACTOR = 16
    MUSIC_GRID_FACTOR = 32
    MUSIC_GAP_FACTOR = 3.0
    MUSIC_MAX_ORDER = 8

    # Experiment harness
    WORKERS = int(os.environ.get('COVEST_WORKERS', 1))
    RESULTS_DIR = os.environ.get('COVEST_RESULTS_DIR', os.path.join(basedir, 'results'))
    CONFIGS_DIR = os.environ.get('COVEST_CONFIGS_DIR', os.path.join(basedir, 'configs'))
    DEFAULT_TRIALS = int(os.environ.get('COVEST_DEFAULT_TRIALS', 100))
    LAMBDA_POINTS = int(os.environ.get('COVEST_LAMBDA_POINTS', 64))
    RECORD_WALL_TIME = os.environ.get('COVEST_RECORD_WALL_TIME', 'True').lower() == 'true'

    # Logging Configuration
    LOG_LEVEL = os.environ.get('LOG_LEVEL', 'INFO')
    LOG_FILE = os.environ.get('LOG_FILE', 'logs/covest.log')
    LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

    @classmethod
    def numeric_settings(cls):
        """Snapshot of the fixed numerical constants, recorded in experiment metadata"""
        return {
            'eig_tolerance': cls.EIG_TOLERANCE,
            'jacobi_offdiag_tolerance': cls.JACOBI_OFFDIAG_TOLERANCE,
            'jacobi_sweep_factor': cls.JACOBI_SWEEP_FACTOR,
            'herm_pair_tolerance': cls.HERM_PAIR_TOLERANCE,
            'cholesky_ridge': cls.CHOLESKY_RIDGE,
            'nnls_dual_tolerance': cls.NNLS_DUAL_TOLERANCE,
            'nnls_kkt_tolerance': cls.NNLS_KKT_TOLERANCE,
            'quadrature_factor': cls.QUADRATURE_FACTOR,
            'music_grid_factor': cls.MUSIC_GRID_FACTOR,
            'music_gap_factor': cls.MUSIC_GAP_FACTOR,
            'music_max_order': cls.MUSIC_MAX_ORDER,
        }

    @classmethod
    def init_logging(cls):
        """Initialize logging with this config"""
        logging.basicConfig(
            level=getattr(logging, cls.LOG_LEVEL.upper(), logging.INFO),
            format=cls.LOG_FORMAT
        )


class DevelopmentConfig(Config):
    """Development configuration"""
    DEBUG = True
    TESTING = False

    @classmethod
    def init_logging(cls):
        Config.init_logging()
        logging.getLogger(__name__).debug("Running in DEVELOPMENT mode")


class ProductionConfig(Config):
    """Production configuration (long unattended sweeps)"""
    DEBUG = False
    TESTING = False

    @classmethod
    def init_logging(cls):
        Config.init_logging()

        from logging.handlers import RotatingFileHandler

        log_dir = os.path.dirname(cls.LOG_FILE)
        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir, exist_ok=True)

        file_handler = RotatingFileHandler(
            cls.LOG_FILE,
            maxBytes=10240000,
            backupCount=10
        )
        file_handler.setFormatter(logging.Formatter(
            '%(asctime)s %(levelname)s: %(message)s [in %(pathname)s:%(lineno)d]'
        ))
        file_handler.setLevel(logging.INFO)
        logging.getLogger('covest').addHandler(file_handler)
        logging.getLogger('covest').info('covest startup - Production Mode')


class TestingConfig(Config):
    """Testing configuration"""
    TESTING = True
    DEBUG = True
    RECORD_WALL_TIME = False
    LOG_LEVEL = 'WARNING'

    @classmethod
    def init_logging(cls):
        logging.getLogger('covest').setLevel(logging.WARNING)


# Configuration dictionary
config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': DevelopmentConfig
}


def get_config(config_name=None):
    """Get configuration based on argument or environment variable"""
    if config_name is None:
        config_name = os.environ.get('COVEST_ENV', 'development')
    return config.get(config_name, config['default'])
