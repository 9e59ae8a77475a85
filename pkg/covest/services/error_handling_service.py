"""
Error Handling and Logging Service for covest
Typed numerical errors plus the central handler that logs and tabulates failures
"""

import json
import logging
import traceback
from collections import Counter
from datetime import datetime
from functools import wraps


class CovestError(Exception):
    """Base class for every error raised by covest operations"""

    error_code = 'COVEST_ERROR'

    def __init__(self, message=None, **context):
        self.message = message or ExperimentErrorHandler.get_user_friendly_message(self.error_code)
        self.context = {key: value for key, value in context.items() if value is not None}
        super().__init__(self.message)

    def to_dict(self):
        return {
            'error_code': self.error_code,
            'message': self.message,
            **self.context
        }


class NonFiniteError(CovestError):
    error_code = 'NON_FINITE'


class NoConvergenceError(CovestError):
    error_code = 'NO_CONVERGENCE'


class NotPSDError(CovestError):
    error_code = 'NOT_PSD'


class DimensionMismatchError(CovestError):
    error_code = 'DIM_MISMATCH'


class InvalidParameterError(CovestError):
    error_code = 'INVALID_PARAM'


class EmptyBatchError(CovestError):
    error_code = 'EMPTY_BATCH'


class ZeroMatrixError(CovestError):
    error_code = 'ZERO_MATRIX'


class OutOfRangeError(CovestError):
    error_code = 'OUT_OF_RANGE'


class OrderTooLargeError(CovestError):
    error_code = 'ORDER_TOO_LARGE'


class MaxIterationsError(CovestError):
    error_code = 'MAX_ITERATIONS'


class EmptyResultError(CovestError):
    error_code = 'EMPTY_RESULT'


class ExportError(CovestError):
    error_code = 'IO_ERROR'


class ConfigError(CovestError):
    """Invalid experiment configuration; `field` names the offending key"""

    error_code = 'CONFIG_ERROR'

    def __init__(self, field, message=None):
        self.field = field
        super().__init__(f"{field}: {message}" if message else f"{field}: invalid value", field=field)


class ExperimentErrorHandler:
    """Centralized error handling for experiment runs"""

    ERROR_MESSAGES = {
        'NON_FINITE': 'Input contains NaN or infinite entries.',
        'NO_CONVERGENCE': 'Eigenvalue iteration did not converge within the sweep cap.',
        'NOT_PSD': 'Matrix is not positive semi-definite, even after adding a ridge.',
        'DIM_MISMATCH': 'Operand dimensions do not agree.',
        'INVALID_PARAM': 'A parameter is outside its admissible range.',
        'EMPTY_BATCH': 'The sample batch contains no samples.',
        'ZERO_MATRIX': 'The matrix is identically zero.',
        'OUT_OF_RANGE': 'A value lies outside its admissible interval.',
        'ORDER_TOO_LARGE': 'Requested model order is not smaller than the array size.',
        'MAX_ITERATIONS': 'Iteration cap reached before the optimality test passed.',
        'EMPTY_RESULT': 'Nothing to aggregate or plot.',
        'IO_ERROR': 'Could not write the requested output file.',
        'CONFIG_ERROR': 'The experiment configuration is invalid.',
        'UNHANDLED_EXCEPTION': 'An unexpected error occurred.'
    }

    @staticmethod
    def get_user_friendly_message(error_code):
        """Get user-facing message for an error code"""
        return ExperimentErrorHandler.ERROR_MESSAGES.get(error_code, 'Unknown error.')

    @staticmethod
    def error_code_of(error):
        """Error code of any exception, falling back to the generic one"""
        return getattr(error, 'error_code', 'UNHANDLED_EXCEPTION')

    @staticmethod
    def log_trial_error(experiment, grid_point, trial, estimator, error):
        """Log a failed estimator invocation; the sweep continues"""
        logger = logging.getLogger('covest.trials')

        log_data = {
            'timestamp': datetime.now().isoformat(),
            'experiment': experiment,
            'grid_point': grid_point,
            'trial': trial,
            'estimator': estimator,
            'error_code': ExperimentErrorHandler.error_code_of(error),
            'error_message': str(error),
            'error_type': type(error).__name__
        }

        logger.warning(f"Trial Error: {json.dumps(log_data, indent=2)}")
        return log_data

    @staticmethod
    def log_config_error(path, error):
        """Log a rejected configuration file"""
        logger = logging.getLogger('covest.config')

        log_data = {
            'timestamp': datetime.now().isoformat(),
            'path': str(path),
            'field': getattr(error, 'field', None),
            'error_code': ExperimentErrorHandler.error_code_of(error),
            'error_message': str(error)
        }

        logger.error(f"Config Error: {json.dumps(log_data, indent=2)}")
        return log_data

    @staticmethod
    def handle_exception(func):
        """Decorator turning unexpected exceptions into a logged error response"""
        @wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except CovestError as e:
                return ExperimentErrorHandler.create_error_response(
                    e.error_code, e.message, **e.context
                )
            except Exception as e:
                logger = logging.getLogger('covest.exceptions')

                error_data = {
                    'function': func.__name__,
                    'args': str(args)[:200],
                    'kwargs': str(kwargs)[:200],
                    'error': str(e),
                    'error_type': type(e).__name__,
                    'stacktrace': traceback.format_exc()
                }

                logger.error(f"Unhandled Exception: {json.dumps(error_data, indent=2)}")

                return ExperimentErrorHandler.create_error_response(
                    'UNHANDLED_EXCEPTION',
                    ExperimentErrorHandler.get_user_friendly_message('UNHANDLED_EXCEPTION'),
                    details=str(e)
                )

        return wrapper

    @staticmethod
    def create_error_response(error_code, error_message, **kwargs):
        """Create standardized error response"""
        response = {
            'success': False,
            'error_code': error_code,
            'message': error_message,
            'timestamp': datetime.now().isoformat()
        }

        for key, value in kwargs.items():
            if value is not None:
                response[key] = value

        return response

    @staticmethod
    def get_error_statistics(rows):
        """Count failed result rows per error code"""
        counts = Counter()
        for row in rows:
            if row.status != 'ok':
                counts[row.metadata.get('error_code', 'UNHANDLED_EXCEPTION')] += 1
        return {
            'error_counts': dict(counts),
            'total_errors': sum(counts.values())
        }
