"""
WSGI entry point serving the epilog HTTP API (``/api/compile/``, ``/api/simulate/``).

Exposes the callable as ``application``.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'epilog.settings')

application = get_wsgi_application()
