"""Configure Django before pytest collects the dequant test modules."""
import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'dequant_site.settings')
django.setup()
