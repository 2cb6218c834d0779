from aircomp.channel import ChannelBlock, ChannelConfig, aircomp_aggregate, draw_channel
from aircomp.payload import Payload, pack, unpack
from aircomp.server import server_postprocess

__all__ = [
    "ChannelBlock",
    "ChannelConfig",
    "Payload",
    "aircomp_aggregate",
    "draw_channel",
    "pack",
    "server_postprocess",
    "unpack",
]
