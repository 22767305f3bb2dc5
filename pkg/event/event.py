"""
事件类型
"""


class EventType:
    EVENT_LOG = "eLog"
    EVENT_TRAIN_STEP = "eTrainStep"
    EVENT_TRAIN_FINISHED = "eTrainFinished"
    EVENT_VERIFY_SUITE = "eVerifySuite"
