import os

import django
from django.test.utils import setup_test_environment

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'epilog.settings')
django.setup()
# What Django's test runner does before running tests (e.g. allows 'testserver').
setup_test_environment()
