"""
🚀 MAIN.PY - Punto de entrada
Uso: python main.py {train,eval,simulate} [--config archivo] [--seed N] [-o salida] [--clave valor ...]
"""

import os
import sys

# Agregar la raíz del proyecto al path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.main import main

if __name__ == "__main__":
    sys.exit(main())
