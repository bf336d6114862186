import os

import django

# lets the suite run under plain unittest/pytest as well as `manage.py test`
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'deanet.settings')
django.setup()
