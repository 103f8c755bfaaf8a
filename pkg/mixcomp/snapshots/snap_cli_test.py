# -*- coding: utf-8 -*-
# snapshottest: v1 - https://goo.gl/zC4yUc
from __future__ import unicode_literals

from snapshottest import Snapshot


snapshots = Snapshot()

snapshots['TestSimulate.test_golden 1'] = '''N,rate,code_dim,avg_fidelity,mode,samples,seed
1,0.25,1,0.853553390593,exact,2,
1,0.5,1,0.853553390593,exact,2,
1,1.0,2,1.0,exact,2,
2,0.25,1,0.728553390593,exact,4,
2,0.5,2,0.835247564417,exact,4,
2,1.0,4,1.0,exact,4,
3,0.25,1,0.621859216769,exact,8,
3,0.5,2,0.699591618865,exact,8,
3,1.0,8,1.0,exact,8,
'''
