"""
covest - Main Command-Line Entry Point
Uses the command-line factory from the covest package
"""

from covest import create_cli

cli = create_cli()

if __name__ == '__main__':
    cli()
