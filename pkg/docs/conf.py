# -*- coding: utf-8 -*-
#
# pyapple documentation build configuration file.

import sys, os

# docs live one level below the project root; import the local package, not an installed one
cwd = os.getcwd()
project_root = os.path.dirname(cwd)
sys.path.insert(0, project_root)

import pyapple

# -- General configuration -----------------------------------------------------

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.viewcode', 'sphinx.ext.mathjax']
templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'pyapple'
copyright = u'2026, the pyapple developers'

version = pyapple.__version__
release = pyapple.__version__

exclude_patterns = ['_build']
pygments_style = 'sphinx'

autodoc_member_order = 'bysource'

# -- Output --------------------------------------------------------------------

html_theme = 'default'
html_static_path = ['_static']
htmlhelp_basename = 'pyappledoc'

latex_documents = [
    ('index', 'pyapple.tex', u'pyapple Documentation', u'the pyapple developers', 'manual'),
]

man_pages = [
    ('index', 'pyapple', u'pyapple Documentation', [u'the pyapple developers'], 1),
]
