def pytest_addoption(parser):
    parser.addoption('--sqztomo-command', action='store', default='sqztomo',
                     help='The sqztomo executable to run cases against')
