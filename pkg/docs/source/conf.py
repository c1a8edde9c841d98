# -*- coding: utf-8 -*-
#
# sqztomo documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import os
import sys

sys.path.insert(0, os.path.abspath('../..'))

extensions = ['sphinx.ext.autodoc']

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'sqztomo'
copyright = u'2024, The sqztomo authors'
author = u'The sqztomo authors'

# The short X.Y version and the full version, including alpha/beta/rc tags.
version = u'0.1'
release = u'0.1.0'

language = 'en'
exclude_patterns = []
pygments_style = 'sphinx'

html_theme = 'alabaster'
html_static_path = []
htmlhelp_basename = 'sqztomodoc'

latex_documents = [
    (master_doc, 'sqztomo.tex', u'sqztomo Documentation',
     author, 'manual'),
]

man_pages = [
    (master_doc, 'sqztomo', u'sqztomo Documentation', [author], 1)
]

texinfo_documents = [
    (master_doc, 'sqztomo', u'sqztomo Documentation', author, 'sqztomo',
     'Homodyne tomography of degraded squeezed light.', 'Scientific'),
]
