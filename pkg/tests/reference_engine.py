"""Naive reference event engine: a single fully-ordered priority queue.

Used to cross-check the circular-buffer clock engine: both run the same
randomized schedule and must execute the same multiset of events at every
cycle (intra-cycle order is not compared).
"""

import heapq


class OrderedQueueEngine:
    def __init__(self):
        self.heap = []
        self.seq = 0
        self.cycle = 0
        self.log = []   # (cycle, event_id)

    def schedule(self, event_id, delta):
        self.seq += 1
        heapq.heappush(self.heap, (self.cycle + delta, self.seq, event_id))

    def run(self, spawn):
        """`spawn(event_id)` returns [(delta, child_id), ...] for each event."""
        while self.heap:
            cycle, _, eid = heapq.heappop(self.heap)
            self.cycle = cycle
            self.log.append((cycle, eid))
            for delta, child in spawn(eid):
                self.schedule(child, delta)
        return self.log
