#include <linux/types.h>

struct pkt {
	u32 seq;
	u32 len;
	u8 flags;
};

typedef int (*pkt_handler_t)(struct pkt *p, void *ctx);

#define DEFINE_PKT_HANDLER(name) static int name(struct pkt *p, void *ctx)

static u32 counter;

/* Plain function, no parameters. */
static void reset_counter(void)
{
	counter = 0;
}

u32 next_seq(u32 seq, u32 len)
{
	return seq + len;
}

/*
 * One parameter is itself a function pointer.
 */
int run_handler(struct pkt *p, int (*handler)(struct pkt *, void *), void *ctx)
{
	if (!handler)
		return -1;
	return handler(p, ctx);
}

static inline int
seq_after(u32 a, u32 b)
{
	return (int)(b - a) < 0;
}

const char *flag_name(u8 flags)
{
	static const char *names[] = { "none", "syn", "ack", "syn-ack" };

	return names[flags & 3];
}

DEFINE_PKT_HANDLER(drop_handler)
{
	(void)ctx;
	p->len = 0;
	return 0;
}

int __init proto_init(void)
{
	const char *brace = "}";
	char open = '{';

	(void)brace;
	(void)open;
	reset_counter();
	return 0;
}
EXPORT_SYMBOL(proto_init);

// Returns a pointer to the static counter.
u32 *counter_ptr(void)
{
	return &counter;
}

static int sum_lengths(const struct pkt *pkts, size_t n)
{
	size_t i;
	int total = 0;

	for (i = 0; i < n; i++) {
		struct pkt copy = pkts[i];
		total += copy.len;
	}
	return total;
}

pkt_handler_t pick_handler(int which)
{
	return which ? drop_handler : 0;
}

void (*get_reset(void))(void)
{
	return reset_counter;
}

static int classify(const struct pkt *p)
{
	switch (p->flags) {
	case 1:
		return 1;
	default:
		break;
	}
	return 0;
}
