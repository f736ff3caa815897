package com.example.app14;

public class MainActivity {
    private String name = "item 14";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 14);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
