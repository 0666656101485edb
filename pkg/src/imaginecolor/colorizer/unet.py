import torch
import torch.nn.functional as F
from torch import nn


def _block(cin, cout):
    return nn.Sequential(
        nn.Conv2d(cin, cout, 3, padding=1),
        nn.InstanceNorm2d(cout, affine=True),
        nn.ReLU(inplace=True),
        nn.Conv2d(cout, cout, 3, padding=1),
        nn.InstanceNorm2d(cout, affine=True),
        nn.ReLU(inplace=True),
    )


class UNet(nn.Module):
    """Encoder-decoder with skip connections and a linear 1x1 output layer."""

    def __init__(self, in_channels=4, out_channels=2, base_width=64, depth=4):
        super().__init__()
        widths = [base_width * 2**k for k in range(depth + 1)]
        self.down = nn.ModuleList([_block(in_channels, widths[0])] +
                                  [_block(widths[k], widths[k + 1]) for k in range(depth)])
        self.up = nn.ModuleList([nn.ConvTranspose2d(widths[k + 1], widths[k], 2, stride=2) for k in range(depth)])
        self.merge = nn.ModuleList([_block(2 * widths[k], widths[k]) for k in range(depth)])
        self.out = nn.Conv2d(widths[0], out_channels, 1)
        self.depth = depth

    @property
    def factor(self):
        return 2**self.depth

    def forward(self, x):
        skips = []
        for k, block in enumerate(self.down):
            x = block(x)
            if k < self.depth:
                skips.append(x)
                x = F.max_pool2d(x, 2)
        for k in reversed(range(self.depth)):
            x = self.merge[k](torch.cat([self.up[k](x), skips[k]], dim=1))
        return self.out(x)
